"""
Train/test split over the three exploration spaces.
"""

from __future__ import annotations

import pytest

from src.dataset import Dataset, MeasurementRecord, SplitPlan, load_split, make_split, save_split
from src.exceptions import InsufficientDiversityError, InvariantError, PreconditionError
from src.features.vector import FEATURE_NAMES, FeatureVector
from src.utils import logger


def _dataset(layout: dict[str, dict[str, tuple[int, ...]]]) -> Dataset:
    records = []
    for family, variants in layout.items():
        for variant, sizes in variants.items():
            for size in sizes:
                values = [1.0] * len(FEATURE_NAMES)
                values[FEATURE_NAMES.index("input_image_size")] = float(size)
                records.append(
                    MeasurementRecord(
                        model_name=f"{family}_{variant}",
                        family=family,
                        variant=variant,
                        input_size=size,
                        device="agx",
                        features=FeatureVector.from_array(values),
                        latency_ms=1.0 + size / 100,
                    )
                )
    return Dataset(device="agx", records=tuple(records))


FOUR_SIZES = (96, 128, 160, 192)


def _cover(plan: SplitPlan) -> list[int]:
    return sorted(plan.train + plan.test_nis + plan.test_ncv + plan.test_nca)


def test_three_families_cover_and_whole_family_held_out():
    ds = _dataset(
        {
            "A": {"a1": FOUR_SIZES, "a2": FOUR_SIZES},
            "B": {"b1": FOUR_SIZES, "b2": FOUR_SIZES},
            "C": {"c1": FOUR_SIZES},
        }
    )
    plan = make_split(ds, 0.7, seed=42)
    assert _cover(plan) == list(range(len(ds)))
    assert plan.test_nis and plan.test_ncv and plan.test_nca

    held_families = {ds.records[i].family for i in plan.test_nca}
    for family in held_families:
        members = [i for i, r in enumerate(ds.records) if r.family == family]
        assert set(members) <= set(plan.test_nca)


def test_coarse_layout_still_splits_with_a_warning():
    ds = _dataset(
        {
            "A": {"a1": FOUR_SIZES, "a2": FOUR_SIZES},
            "B": {"b1": FOUR_SIZES, "b2": FOUR_SIZES},
            "C": {"c1": FOUR_SIZES},
        }
    )
    messages: list[str] = []
    handler = logger.add(lambda message: messages.append(str(message)), level="WARNING")
    try:
        plan = make_split(ds, 0.7, seed=42)
    finally:
        logger.remove(handler)

    # 只有 C 能整族放进 6 条的测试预算，之后任何一个变体都有 4 条
    assert {ds.records[i].family for i in plan.test_nca} == {"C"}
    assert len(plan.test_nca) == 4
    assert len(plan.test_ncv) == 4
    assert len(plan.test_nis) == 1
    assert len(plan.train) == 11
    assert any("misses the target 14" in m for m in messages)


def test_train_size_follows_ratio():
    layout = {f"F{k}": {"v1": (128, 224), "v2": (128, 224)} for k in range(5)}
    ds = _dataset(layout)
    plan = make_split(ds, 0.7, seed=1)
    assert abs(len(plan.train) - 14) <= 2


def test_spaces_have_their_meaning(small_dataset, small_plan):
    records = small_dataset.records
    train_families = {records[i].family for i in small_plan.train}
    train_variants = {(records[i].family, records[i].variant) for i in small_plan.train}
    assert all(records[i].family not in train_families for i in small_plan.test_nca)
    for i in small_plan.test_ncv:
        assert records[i].family in train_families
        assert (records[i].family, records[i].variant) not in train_variants
    train_keys = {(records[i].family, records[i].variant, records[i].input_size) for i in small_plan.train}
    for i in small_plan.test_nis:
        assert (records[i].family, records[i].variant) in train_variants
        assert (records[i].family, records[i].variant, records[i].input_size) not in train_keys


def test_split_is_deterministic(small_dataset, small_plan):
    again = make_split(small_dataset, 0.7, seed=3)
    assert again == small_plan
    assert small_plan.dataset_fingerprint == small_dataset.fingerprint()


def test_two_families_are_not_enough():
    ds = _dataset({"A": {"a1": FOUR_SIZES, "a2": FOUR_SIZES}, "B": {"b1": FOUR_SIZES}})
    with pytest.raises(InsufficientDiversityError):
        make_split(ds)


def test_single_size_variant_is_not_enough():
    ds = _dataset(
        {
            "A": {"a1": FOUR_SIZES, "a2": FOUR_SIZES},
            "B": {"b1": FOUR_SIZES},
            "C": {"c1": (224,)},
        }
    )
    with pytest.raises(InsufficientDiversityError, match="C/c1"):
        make_split(ds)


def test_ratio_must_be_open_interval(small_dataset):
    with pytest.raises(PreconditionError):
        make_split(small_dataset, 1.0)


def test_overlapping_groups_are_rejected():
    with pytest.raises(InvariantError):
        SplitPlan(train=(0, 1), test_nis=(1,), test_ncv=(2,), test_nca=(3,), seed=0)


def test_save_load_roundtrip(tmp_path, small_plan):
    path = save_split(small_plan, tmp_path / "split.json")
    assert load_split(path) == small_plan
