import numpy as np
import pytest

from structmap.vecstore import Dataset, TokenRecord, VectorStore, build_groups


def toy_dataset(
    n_groups=2,
    variants=2,
    length=3,
    dim=4,
    seed=0,
    function_mask=None,
    has_constituency=False,
    n_dep=3,
):
    """Small hand-controllable dataset; forms are unique so lex ids are rows."""
    rng = np.random.default_rng(seed)
    data = rng.normal(size=(n_groups * variants * length, dim)).astype(np.float32)
    mask = function_mask or [False] * length
    tokens = []
    row = 0
    for g in range(n_groups):
        for v in range(variants):
            sid = g * variants + v
            for i in range(length):
                tokens.append(
                    TokenRecord(
                        group_id=g,
                        sent_id=sid,
                        variant=v,
                        tok_idx=i,
                        form=f"w{row}",
                        lex_id=row,
                        pos=f"p{i % 2}",
                        is_function=bool(mask[i]),
                        dep=f"dep{i % n_dep}",
                        head_dep=f"dep{(i + 1) % n_dep}",
                        depth=i,
                        cpath=("NP", "VP", "S") if has_constituency else (),
                        row=row,
                    )
                )
                row += 1
    return Dataset(
        store=VectorStore(data),
        tokens=tokens,
        groups=build_groups(tokens),
        has_constituency=has_constituency,
        has_dependency=True,
    )


@pytest.fixture
def tiny_dataset():
    return toy_dataset()
