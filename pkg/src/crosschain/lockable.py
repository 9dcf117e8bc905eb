"""Lockable key-value store, the unit of isolation for cross-chain calls.

A store belongs to exactly one business contract (its owner). Writes made
inside a cross-chain call do not touch committed state: the first such
write locks the store to that call and registers the store with the
control contract, and all writes pile up in a provisional overlay. The
control contract later finalises the overlay, merging it on commit or
discarding it on ignore. A plain single-chain transaction writes straight
through, but is refused while the store is locked so it can never read or
clobber in-flight state.
"""

from __future__ import annotations

from .ledger import Revert

COMMIT = "COMMIT"
IGNORE = "IGNORE"

# provisional entries: ("set", value) or ("del",)
_SET = "set"
_DEL = "del"


class LockableStore:
    def __init__(self, owner: str, control: str = "control", initial: dict | None = None):
        self.owner = owner
        self.control = control
        self.committed: dict = dict(initial or {})
        self.locked_by: bytes | None = None
        self.provisional: dict = {}

    # owner-facing API ----------------------------------------------------

    def read(self, ctx, key):
        self._owner_only(ctx)
        call_id = self._active_call(ctx)
        if self.locked_by is not None:
            if call_id != self.locked_by:
                raise Revert("store is locked by another call")
            entry = self.provisional.get(key)
            if entry is not None:
                return entry[1] if entry[0] == _SET else None
        return self.committed.get(key)

    def write(self, ctx, key, value):
        self._owner_only(ctx)
        self._apply(ctx, key, (_SET, value))
        return None

    def delete(self, ctx, key):
        self._owner_only(ctx)
        self._apply(ctx, key, (_DEL,))
        return None

    # control-facing API --------------------------------------------------

    def finalise(self, ctx, decision: str):
        if ctx.sender != self.control:
            raise Revert("only the control contract finalises a store")
        if decision not in (COMMIT, IGNORE):
            raise Revert(f"unknown decision {decision!r}")
        if decision == COMMIT:
            for key, entry in self.provisional.items():
                if entry[0] == _SET:
                    self.committed[key] = entry[1]
                else:
                    self.committed.pop(key, None)
        self.provisional = {}
        self.locked_by = None
        return None

    # helpers --------------------------------------------------------------

    def _apply(self, ctx, key, entry) -> None:
        call_id = self._active_call(ctx)
        if call_id is None:
            if self.locked_by is not None:
                raise Revert("store is locked by another call")
            if entry[0] == _SET:
                self.committed[key] = entry[1]
            else:
                self.committed.pop(key, None)
            return
        if self.locked_by is None:
            self.locked_by = call_id
            ctx.call(self.control, "register_lock")
        elif self.locked_by != call_id:
            raise Revert("store is locked by another call")
        self.provisional[key] = entry

    def _owner_only(self, ctx) -> None:
        if ctx.sender != self.owner:
            raise Revert(f"only {self.owner!r} may touch this store")

    def _active_call(self, ctx) -> bytes | None:
        control = ctx.contracts.get(self.control)
        if control is None:
            return None
        return control.active_call()
