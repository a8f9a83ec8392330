"""
训练/测试划分

测试池（约 30%）按三个探索空间分配：
- NCA：整族留出，先抽满约 1/3 的测试预算
- NCV：剩余家族中整个变体留出，约占剩余预算的一半
- NIS：剩余 (family, variant) 的个别输入尺寸，每组至少保留一条记录在训练集
训练集大小与 round(train_ratio * n) 的偏差不超过 2 条记录；
分组粒度过粗的小数据集做不到时仍给出划分，并记录警告。
"""

import json
import math
from collections import defaultdict
from pathlib import Path

from pydantic import BaseModel, ConfigDict, ValidationError, model_validator

from src.dataset.records import Dataset
from src.exceptions import DataIOError, InsufficientDiversityError, InvariantError, PreconditionError, SchemaError
from src.utils import derive_rng, logger

# 训练集规模允许的偏差（记录数）
RATIO_SLACK = 2


class SplitPlan(BaseModel):
    model_config = ConfigDict(frozen=True)

    train: tuple[int, ...]
    test_nis: tuple[int, ...]
    test_ncv: tuple[int, ...]
    test_nca: tuple[int, ...]
    seed: int
    train_ratio: float = 0.7
    dataset_fingerprint: str | None = None

    @model_validator(mode="after")
    def _disjoint(self):
        groups = [self.train, self.test_nis, self.test_ncv, self.test_nca]
        union: set[int] = set()
        for group in groups:
            if union & set(group) or len(set(group)) != len(group):
                raise InvariantError("Split groups must be pairwise disjoint")
            union |= set(group)
        return self

    def spaces(self) -> dict[str, tuple[int, ...]]:
        return {"NIS": self.test_nis, "NCV": self.test_ncv, "NCA": self.test_nca}

    @property
    def test(self) -> tuple[int, ...]:
        return tuple(sorted(self.test_nis + self.test_ncv + self.test_nca))


def _check_diversity(ds: Dataset) -> dict[tuple[str, str], list[int]]:
    groups: dict[tuple[str, str], list[int]] = defaultdict(list)
    for index, record in enumerate(ds.records):
        groups[(record.family, record.variant)].append(index)

    families = {family for family, _ in groups}
    if len(families) < 3:
        raise InsufficientDiversityError(f"Need at least 3 families, found {len(families)}")
    variants_per_family = defaultdict(int)
    for family, _ in groups:
        variants_per_family[family] += 1
    if max(variants_per_family.values()) < 2:
        raise InsufficientDiversityError("Need at least one family with 2 or more variants")
    for (family, variant), members in groups.items():
        if len({ds.records[i].input_size for i in members}) < 2:
            raise InsufficientDiversityError(f"Variant {family}/{variant} has fewer than 2 input sizes")
    return groups


def _first_variant(
    order: list[tuple[str, str]], groups: dict[tuple[str, str], list[int]], remaining: int
) -> tuple[str, str]:
    """按随机顺序选第一个 NCV 变体：优先给 NIS 留至少一条，其次允许超出 RATIO_SLACK 条，最后取最小变体"""
    for limit in (remaining - 1, remaining + RATIO_SLACK - 1):
        for key in order:
            if len(groups[key]) <= limit:
                return key
    smallest = min(order, key=lambda key: len(groups[key]))
    logger.warning(f"Smallest variant {smallest[0]}/{smallest[1]} overshoots the test budget by over {RATIO_SLACK}")
    return smallest


def make_split(ds: Dataset, train_ratio: float = 0.7, seed: int = 42) -> SplitPlan:
    if not 0 < train_ratio < 1:
        raise PreconditionError(f"train_ratio must lie in (0, 1), got {train_ratio}")
    groups = _check_diversity(ds)

    n = len(ds)
    n_test = n - round(train_ratio * n)
    rng = derive_rng(seed)

    family_members: dict[str, list[int]] = defaultdict(list)
    family_variants: dict[str, list[str]] = defaultdict(list)
    for (family, variant), members in sorted(groups.items()):
        family_members[family].extend(members)
        family_variants[family].append(variant)

    # NCA：整族留出，至多占用 2/3 的测试预算，给 NCV 与 NIS 留出空间
    families = sorted(family_members)
    family_order = rng.permutation(len(families))
    nca_cap = n_test - math.ceil(n_test / 3)
    nca_families: list[str] = []
    nca = 0
    for cap in (nca_cap, n_test):
        for position in family_order:
            family = families[position]
            size = len(family_members[family])
            if family in nca_families or len(families) - len(nca_families) <= 2:
                continue
            if nca + size <= cap:
                nca_families.append(family)
                nca += size
            if nca >= math.ceil(n_test / 3):
                break
        if nca_families:
            break
    if not nca_families:
        raise InsufficientDiversityError(f"No family fits into the test budget of {n_test} records")

    # NCV：剩余家族中整个变体留出，每个家族至少保留一个变体
    remaining = n_test - nca
    candidates = sorted(
        (family, variant)
        for family in family_variants
        if family not in nca_families and len(family_variants[family]) >= 2
        for variant in family_variants[family]
    )
    if not candidates:
        raise InsufficientDiversityError("No remaining family has two or more variants")
    candidate_order = [candidates[position] for position in rng.permutation(len(candidates))]
    first = _first_variant(candidate_order, groups, remaining)
    ncv_groups = [first]
    ncv = len(groups[first])
    kept_variants = {family: len(variants) for family, variants in family_variants.items()}
    kept_variants[first[0]] -= 1
    for family, variant in candidate_order:
        size = len(groups[(family, variant)])
        if (family, variant) == first or kept_variants[family] < 2:
            continue
        if ncv + size <= remaining // 2:
            ncv_groups.append((family, variant))
            kept_variants[family] -= 1
            ncv += size

    # NIS：剩余组中的个别输入尺寸
    need = max(n_test - nca - ncv, 1)
    held_out = set(ncv_groups)
    in_train = {key: len(members) for key, members in groups.items()}
    pool = sorted(
        index
        for key, members in groups.items()
        if key[0] not in nca_families and key not in held_out
        for index in members
    )
    nis: list[int] = []
    for position in rng.permutation(len(pool)):
        if len(nis) >= need:
            break
        index = pool[position]
        record = ds.records[index]
        key = (record.family, record.variant)
        if in_train[key] > 1:
            nis.append(index)
            in_train[key] -= 1
    if not nis or need - len(nis) > RATIO_SLACK:
        raise InsufficientDiversityError(f"Only {len(nis)} of {need} new-image-size records could be held out")

    test_nca = sorted(i for family in nca_families for i in family_members[family])
    test_ncv = sorted(i for key in ncv_groups for i in groups[key])
    test_nis = sorted(nis)
    taken = set(test_nca) | set(test_ncv) | set(test_nis)
    train = [i for i in range(n) if i not in taken]
    if abs(len(train) - (n - n_test)) > RATIO_SLACK:
        logger.warning(f"Train size {len(train)} misses the target {n - n_test} by more than {RATIO_SLACK} records")

    logger.info(
        f"Split {n} records (seed={seed}): train={len(train)} NIS={len(test_nis)} "
        f"NCV={len(test_ncv)} NCA={len(test_nca)} families held out: {nca_families}"
    )
    return SplitPlan(
        train=tuple(train),
        test_nis=tuple(test_nis),
        test_ncv=tuple(test_ncv),
        test_nca=tuple(test_nca),
        seed=seed,
        train_ratio=train_ratio,
        dataset_fingerprint=ds.fingerprint(),
    )


def save_split(plan: SplitPlan, path: str | Path) -> Path:
    path = Path(path)
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(json.dumps(plan.model_dump(), indent=2) + "\n", encoding="utf-8")
    except OSError as e:
        raise DataIOError(f"Cannot write split plan: {e}", path=str(path)) from e
    return path


def load_split(path: str | Path) -> SplitPlan:
    path = Path(path)
    try:
        data = json.loads(path.read_text(encoding="utf-8"))
    except OSError as e:
        raise DataIOError(f"Cannot read split plan: {e}", path=str(path)) from e
    except json.JSONDecodeError as e:
        raise DataIOError(f"Split plan is not valid JSON: {e.msg}", path=str(path), line=e.lineno) from None
    try:
        return SplitPlan.model_validate(data)
    except ValidationError as e:
        raise SchemaError(f"Invalid split plan: {e.errors()[0]['msg']}", path=str(path)) from None
