import math

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from corebox.depthref import (
    BOTTOM_TO_TOP,
    CSV_COLUMNS,
    FIXED,
    RIGHT_TO_LEFT,
    VERTICAL,
    DepthInterval,
    DepthSpec,
    adjust_depths,
    assign_depths,
    depths_to_csv,
    order_columns,
    parse_depth_from_filename,
)
from corebox.errors import DegenerateSpec, EmptyInput, NonPositiveInterval
from corebox.extraction import BoundingBox


def bx(x=0, y=0, w=100, h=30):
    return BoundingBox(x=x, y=y, w=w, h=h)


class TestDepthSpec:
    def test_bottom_must_exceed_top(self):
        with pytest.raises(DegenerateSpec):
            DepthSpec(top=10.0, bottom=10.0)

    def test_unknown_order(self):
        with pytest.raises(ValueError):
            DepthSpec(top=0.0, bottom=1.0, row_order="diagonal")

    def test_fixed_needs_length(self):
        with pytest.raises(ValueError):
            DepthSpec(top=0.0, bottom=1.0, mode=FIXED)

    def test_from_dict_defaults(self):
        spec = DepthSpec.from_dict({"top": 10, "bottom": 14})
        assert spec.row_order == "top_to_bottom"
        assert spec.mode == "proportional"


class TestFilenameParsing:
    @pytest.mark.parametrize(
        "name,expected",
        [
            ("box12_1200.0-1201.0m.jpg", (1200.0, 1201.0)),
            ("box_10-12m.png", (10.0, 12.0)),
            ("box_10.5-12m", (10.5, 12.0)),
            ("some/dir/box_3-4m.tiff", (3.0, 4.0)),
            ("box_04_1200.0-1201.0m.png", (1200.0, 1201.0)),
        ],
    )
    def test_matches(self, name, expected):
        assert parse_depth_from_filename(name) == expected

    @pytest.mark.parametrize(
        "name",
        [
            "plain_box.png",
            "box_12-10m.png",      # inverted range
            "box_10-10m.png",      # zero span
            "box_10-12m_extra.png",  # depths not last
            "box_10-12.png",       # missing unit suffix
        ],
    )
    def test_rejects(self, name):
        assert parse_depth_from_filename(name) is None


class TestOrderColumns:
    BOXES = [bx(x=50, y=10), bx(x=5, y=10), bx(x=20, y=80)]

    def test_default_top_to_bottom_left_to_right(self):
        spec = DepthSpec(top=0.0, bottom=1.0)
        assert [(b.x, b.y) for b in order_columns(self.BOXES, spec)] == [
            (5, 10), (50, 10), (20, 80),
        ]

    def test_bottom_to_top(self):
        spec = DepthSpec(top=0.0, bottom=1.0, row_order=BOTTOM_TO_TOP)
        assert [(b.x, b.y) for b in order_columns(self.BOXES, spec)] == [
            (20, 80), (5, 10), (50, 10),
        ]

    def test_right_to_left_ties(self):
        spec = DepthSpec(top=0.0, bottom=1.0, row_direction=RIGHT_TO_LEFT)
        assert [(b.x, b.y) for b in order_columns(self.BOXES, spec)] == [
            (50, 10), (5, 10), (20, 80),
        ]


class TestAssignProportional:
    def test_two_columns_split_three_to_one(self):
        spec = DepthSpec(top=10.0, bottom=14.0)
        intervals, warnings = assign_depths([bx(w=300), bx(w=100)], spec)
        assert warnings == []
        assert [(iv.from_m, iv.to_m) for iv in intervals] == [(10.0, 13.0), (13.0, 14.0)]

    def test_last_interval_pinned_to_bottom(self):
        spec = DepthSpec(top=0.0, bottom=1.0)
        intervals, _ = assign_depths([bx(w=3), bx(w=3), bx(w=3)], spec)
        assert intervals[-1].to_m == 1.0

    def test_vertical_axis_uses_height(self):
        spec = DepthSpec(top=0.0, bottom=4.0)
        intervals, _ = assign_depths([bx(h=10), bx(h=30)], spec, core_axis=VERTICAL)
        assert intervals[0].to_m == pytest.approx(1.0)

    def test_empty_rejected(self):
        with pytest.raises(EmptyInput):
            assign_depths([], DepthSpec(top=0.0, bottom=1.0))

    def test_unknown_axis(self):
        with pytest.raises(ValueError):
            assign_depths([bx()], DepthSpec(top=0.0, bottom=1.0), core_axis="sideways")


class TestAssignFixed:
    def test_exact_fit(self):
        spec = DepthSpec(top=10.0, bottom=13.0, mode=FIXED, column_length=1.0)
        intervals, warnings = assign_depths([bx(), bx(), bx()], spec)
        assert warnings == []
        assert [(iv.from_m, iv.to_m) for iv in intervals] == [
            (10.0, 11.0), (11.0, 12.0), (12.0, 13.0),
        ]

    def test_truncation_warns(self):
        spec = DepthSpec(top=10.0, bottom=12.5, mode=FIXED, column_length=1.0)
        intervals, warnings = assign_depths([bx(), bx(), bx()], spec)
        assert intervals[-1].to_m == 12.5
        assert any("truncated" in w for w in warnings)

    def test_overflow_columns_stop(self):
        spec = DepthSpec(top=10.0, bottom=11.0, mode=FIXED, column_length=1.0)
        intervals, warnings = assign_depths([bx(), bx(), bx()], spec)
        assert len(intervals) == 1
        assert any("below bottom" in w for w in warnings)


class TestAdjustDepths:
    BASE = [
        DepthInterval(index=0, from_m=10.0, to_m=12.0),
        DepthInterval(index=1, from_m=12.0, to_m=14.0),
    ]

    def test_edit_applied_verbatim(self):
        result, warnings = adjust_depths(self.BASE, [(1, 12.0, 13.5)])
        assert result[1] == DepthInterval(index=1, from_m=12.0, to_m=13.5)
        assert warnings == []

    def test_gap_warns(self):
        _, warnings = adjust_depths(self.BASE, [(1, 12.5, 14.0)])
        assert len(warnings) == 1 and "gap" in warnings[0]

    def test_overlap_warns(self):
        _, warnings = adjust_depths(self.BASE, [(1, 11.5, 14.0)])
        assert len(warnings) == 1 and "overlap" in warnings[0]

    def test_non_positive_rejected(self):
        with pytest.raises(NonPositiveInterval):
            adjust_depths(self.BASE, [(0, 12.0, 12.0)])

    def test_unknown_index_rejected(self):
        with pytest.raises(KeyError):
            adjust_depths(self.BASE, [(7, 0.0, 1.0)])

    def test_no_edits_no_warnings(self):
        result, warnings = adjust_depths(self.BASE, [])
        assert result == self.BASE
        assert warnings == []


class TestCsv:
    def test_with_depths(self):
        boxes = [bx(x=1, y=2, w=30, h=4), bx(x=5, y=40, w=31, h=5)]
        intervals = [
            DepthInterval(index=0, from_m=10.0, to_m=12.0),
            DepthInterval(index=1, from_m=12.0, to_m=14.5),
        ]
        text = depths_to_csv(boxes, intervals)
        lines = text.splitlines()
        assert lines[0] == ",".join(CSV_COLUMNS)
        assert lines[1] == "0,1,2,30,4,10.00,12.00"
        assert lines[2] == "1,5,40,31,5,12.00,14.50"

    def test_without_depths(self):
        text = depths_to_csv([bx(x=1, y=2, w=30, h=4)], None)
        assert text.splitlines()[1] == "0,1,2,30,4,,"


@given(
    st.lists(st.integers(1, 4000), min_size=1, max_size=12),
    st.floats(-100.0, 5000.0),
    st.floats(0.01, 200.0),
)
@settings(max_examples=120)
def test_proportional_sum_and_contiguity(widths, top, span):
    """Intervals tile [top, bottom] exactly: contiguous, ordered, summing to
    the full span."""
    boxes = [bx(x=0, y=i * 10, w=w) for i, w in enumerate(widths)]
    spec = DepthSpec(top=top, bottom=top + span)
    intervals, warnings = assign_depths(boxes, spec)
    assert warnings == []
    assert len(intervals) == len(boxes)
    assert intervals[0].from_m == top
    assert intervals[-1].to_m == top + span
    for prev, cur in zip(intervals, intervals[1:]):
        assert cur.from_m == prev.to_m
    total = sum(iv.to_m - iv.from_m for iv in intervals)
    assert math.isclose(total, span, rel_tol=0.0, abs_tol=1e-9 * max(1.0, abs(top) + span))
    for iv in intervals:
        assert iv.to_m > iv.from_m
