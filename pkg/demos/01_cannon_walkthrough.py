"""Walkthrough: verifying the cannon/robots model end to end.

Robots try to cross a field from `init` to `target` through zone A or B while
a cannon alternates turns with them, pulsing a zone and blasting every robot
standing in it.  The safety question: can some robot ever reach the target?

Run:  python3 demos/01_cannon_walkthrough.py
"""

from pmasafety.dsl import parse_pmas
from pmasafety.encoder import encode
from pmasafety.engine import breach
from pmasafety.mcmt import emit_mcmt, serialize_witness
from pmasafety.model import RelInterpretation
from pmasafety.models import fixture_text
from pmasafety.oracle import ConcreteConfig, replay_run_template

p = parse_pmas(fixture_text("cannon"), "cannon")
print(f"model: {p.name}")
print(f"agent templates: {[t.name for t in p.templates]}, environment: {p.env.name}")

# 1. encode as an array-based transition system (one array per agent variable,
#    one global per environment variable, plus phase bookkeeping)
abp = encode(p, "interleaved")
print(f"\nencoded {len(abp.rules)} transition rules, "
      f"arrays {sorted(abp.sig.arrays)}, globals {sorted(abp.sig.globals)}")

# 2. backward reachability from the goal (some robot at target)
v = breach(abp)
print(f"\nverdict: {v.status} at depth {v.depth} ({v.total_cubes} cubes explored)")
print("rule trace:", " -> ".join(s.rule_label for s in v.trace))
print("run template:", [sorted(step) for step in v.run_template])

# 3. independent confirmation: replay the template on the explicit-state
#    oracle with a single robot and no snow
cfg = ConcreteConfig((("Att", 1),), RelInterpretation(), "interleaved")
res = replay_run_template(p, v.run_template, cfg)
print(f"\noracle replay with 1 robot: {res.status}")

# 4. the same system in MCMT syntax, plus the engine trace as a witness string
print(f"\nwitness string: {serialize_witness(v.trace, abp.rules)}")
print(f"MCMT rendition: {len(emit_mcmt(abp).splitlines())} lines "
      "(see `pmasafety emit-mcmt` or tests/data/cannon.mcmt)")
