"""
Fault campaigns
===============

Run every rotation of a scenario class under injected faults and print the
verdict matrix, one column per distance/speed configuration.
"""

from trafficrv import PROFILES, CampaignConfig, fixtures, run_campaign
from trafficrv.campaign import LIGHT_CLASSES, STOP_CLASSES, format_matrix

# %%
# Stop junction: early burst (i1), shrunken scheduler zone (i2), creation-order priority (i3).
stop_map = fixtures.four_way_stop()
profile = PROFILES["stop-asymmetric"]
table = run_campaign(
    CampaignConfig(
        stop_map,
        classes=STOP_CLASSES,
        configs="ABCDE",
        faults=profile.faults(["i1", "i2", "i3"]),
        params=profile.params(stop_map.speed_limit),
        scheduler=profile.scheduler,
    )
)
print(format_matrix(table))

# %%
# Traffic lights: early burst, random right turn on red (i4), missing look-ahead (i5).
light_map = fixtures.four_way_light()
profile = PROFILES["light"]
table = run_campaign(
    CampaignConfig(
        light_map,
        junction="traffic_light",
        classes=LIGHT_CLASSES,
        configs="FGHIJ",
        properties=["builtin:p4", "builtin:p5", "builtin:p6"],
        faults=profile.faults(["i1", "i4", "i5"]),
        params=profile.params(light_map.speed_limit),
    )
)
print()
print(format_matrix(table))

# %%
# Each Fail comes with the witness tick and the states around it.
if table.diagnostics:
    d = table.diagnostics[0]
    print("\nfirst failure:", d["scenario"], d["config"], d["property"], "tick", d["witness_tick"])
