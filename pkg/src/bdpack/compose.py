"""Recursive constructions on regular BDPs: filling, DM inflation, relabelling.

Every rule certifies its ingredients and its output unless ``recertify`` is
switched off; the engine always certifies its final result regardless.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .abelian import Group, GroupError, Relabel, scale_embed, subgroup
from .diffmat import DiffMatrix, verify_dm
from .packing import Certificate, Packing, certify

__all__ = ["CompositionError", "relabel", "fill", "inflate", "inflate_axis", "axis_dm", "leave_image"]


class CompositionError(ValueError):
    def __init__(self, msg: str, certificate: Certificate | None = None):
        super().__init__(msg + (f" ({certificate.reason})" if certificate is not None and certificate.reason else ""))
        self.certificate = certificate


@dataclass(frozen=True)
class _Checked:
    recertify: bool

    def need(self, p: Packing, what: str) -> None:
        if not self.recertify:
            return
        cert = certify(p)
        if not cert.ok:
            raise CompositionError(f"{what} ({p.name or p.group}) does not certify", cert)


def _map_blocks(p: Packing, fwd) -> tuple[tuple[tuple[int, ...], ...], ...]:
    coords, offsets = p.arrays
    if not len(p.blocks):
        return ()
    img = fwd(coords)
    return tuple(tuple(tuple(int(c) for c in img[i]) for i in range(offsets[b], offsets[b + 1]))
                 for b in range(len(p.blocks)))


def leave_image(src: Group, orders: tuple[int, ...], r: Relabel) -> tuple[int, ...]:
    """Per-coordinate orders of the image of the subgroup ``orders`` under r.

    Raises if the image is not a product of coordinate subgroups.
    """
    sub = np.array(sorted(subgroup(src, orders)), dtype=np.int64).reshape(-1, src.arity)
    img = r.forward_array(sub)
    tgt = r.target
    new = tuple(len(np.unique(img[:, i])) for i in range(tgt.arity))
    want = subgroup(tgt, new)
    got = {tuple(int(c) for c in row) for row in img}
    if got != want:
        raise GroupError(f"image of the {orders} subgroup of {src} is not a coordinate subgroup of {tgt}")
    return new


def relabel(p: Packing, r: Relabel, name: str = "", recertify: bool = True) -> Packing:
    """Push a packing through a group isomorphism; the claimed leave follows."""
    if r.source != p.group:
        raise GroupError(f"relabel source {r.source} is not {p.group}")
    leave = None if p.claimed_leave is None else leave_image(p.group, p.claimed_leave, r)
    out = Packing(r.target, _map_blocks(p, r.forward_array), p.sizes, leave, name or p.name)
    _Checked(recertify).need(out, "relabelled packing")
    return out


def fill(outer: Packing, inner: Packing, name: str = "", recertify: bool = True) -> Packing:
    """Place ``inner`` (over Z_g x Z_h) into the leave subgroup of a regular (g,h) ``outer``.

    The result is optimal if ``inner`` is, and regular (s,t) if ``inner`` is regular (s,t).
    """
    if outer.claimed_leave is None:
        raise CompositionError("outer packing must be regular (claim a leave)")
    if tuple(inner.group.moduli) != tuple(outer.claimed_leave):
        raise CompositionError(f"inner group {inner.group} does not match the outer leave {outer.claimed_leave}")
    if inner.sizes != outer.sizes:
        raise CompositionError("block-size sets differ")
    chk = _Checked(recertify)
    chk.need(outer, "outer packing")
    chk.need(inner, "inner packing")
    emb = scale_embed(inner.group, outer.group)
    blocks = outer.blocks + _map_blocks(inner, emb.apply_array)
    out = Packing(outer.group, blocks, outer.sizes, inner.claimed_leave, name)
    chk.need(out, "filled packing")
    return out


def inflate(base: Packing, d: DiffMatrix, name: str = "", recertify: bool = True) -> Packing:
    """Inflate a regular (g,h) BDP over Z_u x Z_v by a DM over Z_m x Z_n.

    Block elements are taken in lexicographic order; element i gets DM row i,
    and column l contributes the block { (x_i + u a_il, y_i + v b_il) }.
    The result is regular (mg, nh) over Z_mu x Z_nv with mn times the blocks.
    """
    if base.claimed_leave is None:
        raise CompositionError("base packing must be regular (claim a leave)")
    if d.group.arity != base.group.arity:
        raise CompositionError(f"DM group {d.group} and base group {base.group} differ in arity")
    kmax = max(base.sizes)
    if d.k < kmax:
        raise CompositionError(f"DM has {d.k} rows, blocks need {kmax}")
    chk = _Checked(recertify)
    chk.need(base, "base packing")
    if recertify:
        dc = verify_dm(d)
        if not dc.ok:
            raise CompositionError("difference matrix does not verify", dc)
    mods = base.group.mod_array
    new_group = Group(tuple(int(a * b) for a, b in zip(base.group.moduli, d.group.moduli)))
    new_mods = new_group.mod_array
    ncol = d.n_columns
    blocks = []
    for blk in base.blocks:
        pts = np.array(sorted(blk), dtype=np.int64)  # (k, r)
        kk = len(pts)
        lifted = (pts[:, None, :] + mods * d.rows[:kk]) % new_mods  # (k, ncol, r)
        for l in range(ncol):
            blocks.append(tuple(tuple(int(c) for c in lifted[i, l]) for i in range(kk)))
    leave = tuple(int(a * b) for a, b in zip(base.claimed_leave, d.group.moduli))
    out = Packing(new_group, tuple(blocks), base.sizes, leave, name)
    chk.need(out, "inflated packing")
    return out


def axis_dm(cdm: DiffMatrix, axis: int, arity: int = 2) -> DiffMatrix:
    """Extend a cyclic DM to Z_1 x ... x Z_m x ... x Z_1 (m on ``axis``)."""
    if cdm.group.arity != 1:
        raise CompositionError(f"axis inflation needs a cyclic DM, got one over {cdm.group}")
    k, n, _ = cdm.rows.shape
    rows = np.zeros((k, n, arity), dtype=np.int64)
    rows[:, :, axis] = cdm.rows[:, :, 0]
    mods = [1] * arity
    mods[axis] = cdm.group.moduli[0]
    return DiffMatrix(Group(tuple(mods)), rows, cdm.generator, cdm.seed, cdm.note)


def inflate_axis(base: Packing, axis: int | str, cdm: DiffMatrix, name: str = "",
                 recertify: bool = True) -> Packing:
    """Inflate one coordinate only ('u'/0 or 'v'/1) by a cyclic DM."""
    ax = {"u": 0, "v": 1}.get(axis, axis) if isinstance(axis, str) else axis
    if not isinstance(ax, int) or not 0 <= ax < base.group.arity:
        raise CompositionError(f"bad axis {axis!r}")
    return inflate(base, axis_dm(cdm, ax, base.group.arity), name, recertify)
