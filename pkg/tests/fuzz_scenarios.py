"""Random tree-topology scenario generator for losslessness fuzzing.

Each generated scenario is a random tree of up to 4 switches with hosts
hanging off them, finite-message flows between random host pairs, automatic
pause watermarks, and a randomly chosen congestion-management mode.  Finite
messages let tests drain the network and check exact conservation."""

import random

from rocesim.scenario import (
    FlowSpec,
    Link,
    MechanismConfig,
    Node,
    NodeKind,
    Scenario,
    Topology,
    finalize_scenario,
    set_config_value,
)

RATES = [10_000_000_000, 25_000_000_000, 40_000_000_000, 100_000_000_000]
MTUS = [512, 1024, 2048]
MODES = ["off", "1a", "1b"]


def random_scenario(seed: int) -> Scenario:
    rng = random.Random(seed)
    nodes = []
    links = []

    num_switches = rng.randint(1, 4)
    switches = [f"sw{i}" for i in range(num_switches)]
    for name in switches:
        nodes.append(Node(name, NodeKind.NE))
    for i in range(1, num_switches):
        parent = switches[rng.randrange(i)]
        links.append(Link(parent, switches[i], rng.choice(RATES),
                          rng.randint(0, 500)))

    num_hosts = rng.randint(2, 6)
    hosts = [f"h{i}" for i in range(num_hosts)]
    for name in hosts:
        nodes.append(Node(name, NodeKind.CA))
        links.append(Link(name, rng.choice(switches), rng.choice(RATES),
                          rng.randint(0, 500)))

    num_vls = rng.choice([1, 1, 2])
    flows = []
    used_keys = set()
    for i in range(rng.randint(1, 8)):
        src, dst = rng.sample(hosts, 2)
        vl = rng.randrange(num_vls)
        if (src, dst, vl) in used_keys:
            continue
        used_keys.add((src, dst, vl))
        flows.append(FlowSpec(
            flow_id=f"f{i}", src=src, dst=dst, vl=vl,
            start_ns=rng.randint(0, 50_000),
            message_bytes=rng.randint(1, 120_000),
            mtu_payload_bytes=rng.choice(MTUS)))

    mech = MechanismConfig(num_vls=num_vls)
    set_config_value(mech, "rcm.mode", rng.choice(MODES))
    topo = Topology(nodes=nodes, links=links)
    finalize_scenario(topo, flows, mech)
    return Scenario(topo, flows, mech)
