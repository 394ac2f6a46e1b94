"""
Checking traffic rules on a trace
=================================

Write a property, break the simulator on purpose, and read the verdict.
"""

from trafficrv import AbstractScenario, FaultConfig, builtin, check, concretize, fixtures, parse_formula, run_scenario
from trafficrv.logic import BUILTIN_TEXT, to_text

model = fixtures.four_way_stop()

# %%
# The built-in rule for stop junctions: no two cars inside at once.
print("p1 =", BUILTIN_TEXT["p1"])

# %%
# Cars one centimetre from the line, with the initial burst fault on,
# roll in together.
sc = concretize(model, "J0", AbstractScenario.from_key("0d2-1d1-2d1-3d1", 4), [0.01] * 4, [0.0] * 4)
faulty = run_scenario(model, sc, faults=FaultConfig.from_names(["i1"]))
verdict = check(builtin("p1"), model, faulty)
print("with i1:", verdict.value, "at tick", verdict.witness_tick, dict(verdict.witness_binding))

# %%
# The same start without faults respects the rule.
clean = run_scenario(model, sc)
print("faults off:", check(builtin("p1"), model, clean).value)

# %%
# Custom properties use the same syntax.
every_car_enters = parse_formula("forall a:agent. F at(a, J)")
print(to_text(every_car_enters), "->", check(every_car_enters, model, clean).value)
