"""Seeded pseudo-random model generator for cross-validation runs.

Each seed deterministically yields a small model in the surface DSL: at most
two agent templates plus an environment, at most two variables of at most
three values each per template, at most three actions per template, at most
one relation, and a goal over at most two index variables.  Preconditions
mention only `self` and `e`, so every literal of the encoded system is local
and the interleaved backward search is guaranteed to terminate — which is
what makes blind cross-checking against the bounded oracle practical.
"""

from __future__ import annotations

import random

from .dsl import parse_pmas
from .model import Pmas

# constants are globally unique, so every name carries its sort's prefix
_SORT_NAMES = ("Va", "Vb")


def _consts(sort_idx: int, n: int) -> list[str]:
    return [f"{_SORT_NAMES[sort_idx].lower()}{k}" for k in range(n)]


def generate_model_text(seed: int) -> str:
    """DSL text of the model for `seed` (deterministic)."""
    rng = random.Random(seed)
    lines: list[str] = [f"# corpus model seed={seed}", ""]

    n_vals = rng.choice((2, 3))
    vals = _consts(0, n_vals)
    lines.append(f"sort {_SORT_NAMES[0]} {{ {', '.join(vals)} }}")

    # at most one relation; binary relations only over the 2-value domain so
    # that full interpretation enumeration stays cheap (16 interpretations)
    rel_arity = 0
    if rng.random() < 0.5:
        rel_arity = 1 if n_vals == 3 else rng.choice((1, 2))
        args = ", ".join([_SORT_NAMES[0]] * rel_arity)
        lines.append(f"relation R({args})")
    lines.append("")

    def rel_atom(rng: random.Random, subject: str) -> str:
        args = [
            subject if rng.random() < 0.5 else rng.choice(vals)
            for _ in range(rel_arity)
        ]
        atom = f"R({', '.join(args)})"
        return atom if rng.random() < 0.5 else f"not {atom}"

    n_agents = 1 if rng.random() < 0.7 else 2
    tnames = ["A", "B"][:n_agents]
    var_of = {t: f"{t.lower()}v" for t in tnames}
    env_var = "ev"

    def pre_atoms(rng: random.Random, own: str, own_is_env: bool) -> str:
        subject = f"{own}[e]" if own_is_env else f"{own}[self]"
        atoms = []
        k = rng.choice((1, 1, 2))
        pool = ["own", "env"] if not own_is_env else ["own"]
        if rel_arity:
            pool.append("rel")
        picked = rng.sample(pool, min(k, len(pool)))
        for kind in picked:
            if kind == "own":
                op = "=" if rng.random() < 0.7 else "!="
                atoms.append(f"{subject} {op} {rng.choice(vals)}")
            elif kind == "env":
                op = "=" if rng.random() < 0.7 else "!="
                atoms.append(f"{env_var}[e] {op} {rng.choice(vals)}")
            else:
                atoms.append(rel_atom(rng, subject))
        return " and ".join(atoms) if atoms else "true"

    sync_name = None
    if rng.random() < 0.35:
        sync_name = "hs"
    sync_kind = rng.choice(("sync", "individual")) if sync_name else None

    for t in tnames:
        v = var_of[t]
        lines.append(f"template {t}")
        lines.append(f"  var {v}: {_SORT_NAMES[0]} = {rng.choice(vals)}")
        n_local = rng.choice((1, 2))
        for k in range(n_local):
            lines.append(f"  action {t.lower()}_act{k} : local {{")
            lines.append(f"    pre: {pre_atoms(rng, v, False)};")
            lines.append(f"    eff: {v} := {rng.choice(vals)}")
            lines.append("  }")
        if sync_name and (t == tnames[0] or rng.random() < 0.5):
            lines.append(f"  action {sync_name} : {sync_kind} {{")
            lines.append(f"    pre: {pre_atoms(rng, v, False)};")
            lines.append(f"    eff: {v} := {rng.choice(vals)}")
            lines.append("  }")
        lines.append("")

    lines.append("template E env")
    lines.append(f"  var {env_var}: {_SORT_NAMES[0]} = {rng.choice(vals)}")
    if rng.random() < 0.7 or not sync_name:  # templates need >=1 action
        lines.append("  action e_act : local {")
        lines.append(f"    pre: {pre_atoms(rng, env_var, True)};")
        lines.append(f"    eff: {env_var} := {rng.choice(vals)}")
        lines.append("  }")
    if sync_name:
        lines.append(f"  action {sync_name} : {sync_kind} initiator {{")
        lines.append(f"    pre: {pre_atoms(rng, env_var, True)};")
        lines.append(f"    eff: {env_var} := {rng.choice(vals)}")
        lines.append("  }")
    lines.append("")

    # goal over at most two index variables, one literal each
    goal_lits = [f"{var_of[tnames[0]]}[j1] = {rng.choice(vals)}"]
    r = rng.random()
    if r < 0.25 and n_agents == 2:
        goal_lits.append(f"{var_of[tnames[1]]}[j2] = {rng.choice(vals)}")
    elif r < 0.45:
        goal_lits.append(f"{env_var}[e] = {rng.choice(vals)}")
    elif r < 0.6:
        goal_lits.append(f"{var_of[tnames[0]]}[j2] = {rng.choice(vals)}")
        goal_lits.append("j1 != j2")
    lines.append("goal: " + " and ".join(goal_lits))
    return "\n".join(lines) + "\n"


def generate_model(seed: int) -> Pmas:
    """Parsed, validated model for `seed`."""
    return parse_pmas(generate_model_text(seed), name=f"corpus-{seed}")


def generate_corpus(n: int, base_seed: int = 0) -> list[tuple[int, Pmas]]:
    """`n` validated models, seeds base_seed, base_seed+1, ..."""
    out = []
    seed = base_seed
    while len(out) < n:
        out.append((seed, generate_model(seed)))
        seed += 1
    return out
