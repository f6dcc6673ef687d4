"""DRAT proof logging and an independent forward RUP checker.

The solver's learnt clauses are all reverse-unit-propagation (RUP) clauses,
so a forward RUP check over added/deleted clauses is a complete validity
check for its proofs.  The checker shares no code with the solver's
propagation engine: it uses a naive repeated-scan unit propagation.
"""

from __future__ import annotations

from dataclasses import dataclass, field


@dataclass
class DratProof:
    """In-memory proof: list of ('a'|'d', lits) steps."""
    steps: list[tuple[str, tuple[int, ...]]] = field(default_factory=list)

    def add(self, lits):
        self.steps.append(("a", tuple(lits)))

    def delete(self, lits):
        self.steps.append(("d", tuple(lits)))

    @property
    def has_empty_clause(self) -> bool:
        return any(kind == "a" and not lits for kind, lits in self.steps)

    def to_text(self) -> str:
        out = []
        for kind, lits in self.steps:
            body = " ".join(str(l) for l in lits) + (" " if lits else "") + "0"
            out.append(body if kind == "a" else "d " + body)
        return "\n".join(out) + ("\n" if out else "")


class DratFileSink:
    """Streams ASCII DRAT lines to a file while keeping an in-memory copy."""

    def __init__(self, path: str):
        self.path = path
        self.proof = DratProof()
        self._fh = open(path, "w")

    def add(self, lits):
        self.proof.add(lits)
        body = " ".join(str(l) for l in lits) + (" " if lits else "") + "0"
        self._fh.write(body + "\n")

    def delete(self, lits):
        self.proof.delete(lits)
        body = " ".join(str(l) for l in lits) + " 0"
        self._fh.write("d " + body + "\n")

    def close(self):
        self._fh.close()


def parse_drat(text: str) -> DratProof:
    proof = DratProof()
    for line in text.splitlines():
        toks = line.split()
        if not toks or toks[0] == "c":
            continue
        kind = "a"
        if toks[0] == "d":
            kind = "d"
            toks = toks[1:]
        if not toks or toks[-1] != "0":
            raise ValueError(f"malformed DRAT line {line!r}")
        lits = tuple(int(t) for t in toks[:-1])
        proof.steps.append((kind, lits))
    return proof


def _propagate(db: list[tuple[int, ...]], assumed: list[int]) -> bool:
    """Naive unit propagation; True iff a conflict is derived."""
    values: dict[int, bool] = {}
    for lit in assumed:
        v, want = abs(lit), lit > 0
        if values.get(v, want) != want:
            return True
        values[v] = want
    changed = True
    while changed:
        changed = False
        for clause in db:
            unassigned = None
            satisfied = False
            count_free = 0
            for lit in clause:
                v = abs(lit)
                if v not in values:
                    unassigned = lit
                    count_free += 1
                    if count_free > 1:
                        break
                elif values[v] == (lit > 0):
                    satisfied = True
                    break
            if satisfied or count_free > 1:
                continue
            if count_free == 0:
                return True  # conflict
            v, want = abs(unassigned), unassigned > 0
            values[v] = want
            changed = True
    return False


def check_proof(clauses: list[list[int]], proof: DratProof) -> tuple[bool, str]:
    """Forward RUP check of an UNSAT proof against the original clauses.

    Returns (ok, reason).  ok requires every added clause to be RUP at its
    point in the proof and the proof to derive the empty clause.
    """
    db: list[tuple[int, ...]] = [tuple(cl) for cl in clauses]
    derived_empty = False
    for step_no, (kind, lits) in enumerate(proof.steps):
        if kind == "d":
            key = tuple(lits)
            try:
                db.remove(key)
            except ValueError:
                pass  # deleting an absent clause is harmless
            continue
        # RUP: assuming the negation of every literal must yield a conflict
        if not _propagate(db, [-l for l in lits]):
            return False, f"step {step_no}: clause {list(lits)} is not RUP"
        if not lits:
            derived_empty = True
            break
        db.append(tuple(lits))
    if not derived_empty:
        return False, "proof does not derive the empty clause"
    return True, "ok"
