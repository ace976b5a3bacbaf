import copy

import yaml

from flightq.scenario import parse_scenario

BASE = {
    "version": 1,
    "name": "test",
    "sim": {"dt": 0.01, "delta_min": 0.1, "v_max_default": 1.0, "initial_flight_time": 300, "horizon": 60, "seed": 0},
    "openings": [
        {
            "id": 1,
            "position": [0.0, 0.0, 0.0],
            "lambda": 0.5,
            "pattern": {"variant": "circle", "radius": 1.0, "slots": 4},
        }
    ],
    "workload": {"kind": "burst", "n": 1},
}


def scenario_dict(**overrides):
    """The base scenario as a dict; ``sim`` keys are merged, other sections replaced."""
    d = copy.deepcopy(BASE)
    for key, value in overrides.items():
        if key == "sim":
            d[key].update(value)
        else:
            d[key] = value
    return d


def make_scenario(**overrides):
    return parse_scenario(yaml.safe_dump(scenario_dict(**overrides)))
