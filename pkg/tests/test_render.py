import re

import pytest

from dqc_sched.feasibility import InfeasibleSchedule
from dqc_sched.render import render_csv, render_gantt

from conftest import T32, circuit, instance, schedule


def fragments(svg):
    return re.findall(r'<g class="fragment" data-circuit="(\d+)" data-sub="(\d+)" data-qpu="(\d+)" '
                      r'data-start="(\d+)" data-end="(\d+)"', svg)


def labels(svg):
    return re.findall(r">(s_\{\d+,\d+\})</text>", svg)


def test_empty_schedule_draws_lanes_only():
    inst = instance([circuit(0, [(*T32, 10)], 500)], qpus=((20, 20), (20, 20), (20, 20)))
    svg = render_gantt(inst, schedule([False], []))
    assert svg.count('class="lane"') == 3
    assert fragments(svg) == [] and 'class="deadline"' not in svg


def test_single_fragment_spans_its_interval():
    inst = instance([circuit(0, [(*T32, 10)], 500)])
    svg = render_gantt(inst, schedule([True], [(0, 0, 0, 10, 0)]))
    assert fragments(svg) == [("0", "0", "0", "0", "320")]
    assert labels(svg) == ["s_{0,0}"]
    assert svg.count('class="deadline"') == 1


def test_split_subcircuit_shares_its_label_across_lanes(chain_instance, chain_schedule):
    svg = render_gantt(chain_instance, chain_schedule)
    assert [(q, s, e) for _, sub, q, s, e in fragments(svg) if sub == "0"] == [("0", "0", "160"), ("1", "0", "160")]
    assert labels(svg).count("s_{0,0}") == 2


def test_lanes_follow_qpu_order_and_output_is_stable(chain_instance, chain_schedule):
    svg = render_gantt(chain_instance, chain_schedule, title="proposed")
    assert re.findall(r'class="lane" data-qpu="(\d+)"', svg) == ["0", "1"]
    assert svg == render_gantt(chain_instance, chain_schedule, title="proposed")


def test_infeasible_schedule_is_refused(chain_instance):
    with pytest.raises(InfeasibleSchedule):
        render_gantt(chain_instance, schedule([True], [(0, 0, 0, 10, 0), (0, 1, 0, 10, 100)]))


def test_csv_rows(chain_instance, chain_schedule):
    assert render_csv(chain_instance, chain_schedule).splitlines() == [
        "qpu,circuit,sub,shots,start,end",
        "0,0,0,5,0,160",
        "0,0,1,10,160,480",
        "1,0,0,5,0,160",
    ]
