"""SDPA sparse format (.dat-s) writer and parser.

The file encodes the standard pair

    (P) min  c' u   s.t.  X = sum_i u_i F_i - F_0,  X >= 0
    (D) max  tr(F_0 Y)  s.t.  tr(F_i Y) = c_i,  Y >= 0

Our ConicProgram (maximize <C, Y> over <A_i, Y> = b_i, Y >= 0) maps onto
the (D) side with F_0 = C, F_i = A_i and c = b; minimization programs are
exported with F_0 = -C, so a conformant solver's optimal value always
equals the program's value up to that recorded sign.
"""

from __future__ import annotations

import numpy as np

from .program import ConicProgram


def export_sdpa(prog: ConicProgram, path) -> None:
    lines = []
    negated = prog.sense == "min"
    lines.append(f'"boundgame conic program; sense={prog.sense}; negated_objective={int(negated)}"')
    lines.append(f"{prog.n_constraints} = mDIM")
    lines.append(f"{prog.n_blocks} = nBLOCK")
    lines.append(" ".join(str(s) for s in prog.block_sizes) + " = bLOCKsTRUCT")
    lines.append(" ".join(_fmt(v) for v in prog.rhs))

    obj_sign = -1.0 if negated else 1.0
    obj, cons, _ = prog.canonical_entries()
    for (blk, i, j), v in obj:
        lines.append(f"0 {blk + 1} {i + 1} {j + 1} {_fmt(obj_sign * v)}")
    for k, row in enumerate(cons):
        for (blk, i, j), v in row:
            lines.append(f"{k + 1} {blk + 1} {i + 1} {j + 1} {_fmt(v)}")
    with open(path, "w") as fh:
        fh.write("\n".join(lines) + "\n")


def parse_sdpa(path) -> ConicProgram:
    """Read a sparse SDPA file back into a maximization ConicProgram."""
    with open(path) as fh:
        raw = fh.readlines()
    body = []
    header_comments = []
    for line in raw:
        stripped = line.strip()
        if not stripped:
            continue
        if stripped.startswith(('"', "*")):
            header_comments.append(stripped)
            continue
        body.append(stripped)

    m = int(_leading_token(body[0]))
    nblocks = int(_leading_token(body[1]))
    sizes = _parse_block_struct(body[2], nblocks)
    c_vec = [float(t) for t in body[3].replace(",", " ").split()][:m]

    prog = ConicProgram(sense="max", block_sizes=sizes)
    rows: list[list[tuple[int, int, int, float]]] = [[] for _ in range(m)]
    for line in body[4:]:
        toks = line.replace(",", " ").split()
        if len(toks) != 5:
            raise ValueError(f"malformed SDPA entry line: {line!r}")
        k, blk, i, j, v = int(toks[0]), int(toks[1]) - 1, int(toks[2]) - 1, int(toks[3]) - 1, float(toks[4])
        if i > j:
            i, j = j, i
        if k == 0:
            prog.add_objective(blk, i, j, v)
        else:
            rows[k - 1].append((blk, i, j, v))
    for row, rhs in zip(rows, c_vec):
        prog.add_constraint(row, rhs)
    return prog


def _parse_block_struct(line: str, nblocks: int) -> list[int]:
    cleaned = line.split("=")[0]
    for ch in "(){},":
        cleaned = cleaned.replace(ch, " ")
    sizes = [int(float(t)) for t in cleaned.split()][:nblocks]
    if len(sizes) != nblocks:
        raise ValueError("block structure line does not match nBLOCK")
    return sizes


def _leading_token(line: str) -> str:
    return line.replace("=", " ").split()[0]


def _fmt(v: float) -> str:
    return np.format_float_scientific(v, precision=17, trim="-")
