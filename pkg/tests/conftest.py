import pytest

from polyest.ratedb import DbEntry, RateDatabase

# Published logical rates per round for the standard depolarizing benchmark
# at p = 1e-3, distances 3 through 6.
BENCH_X = {3: 1.1e-3, 4: 4.5e-4, 5: 1.0e-4, 6: 3.2e-5}
BENCH_Z = {3: 1.4e-3, 4: 5.8e-4, 5: 1.5e-4, 6: 4.7e-5}


def build_bench_db():
    # The depolarizing model reduces to r0 = 2 on the X side and r0 = 10/3 on
    # the Z side; storing both ladder neighbors with the same values makes
    # every benchmark query exact.
    db = RateDatabase(metadata={"source": "seeded-benchmark"})
    for d, px in BENCH_X.items():
        for r0 in (2.0, 5.0):
            db.add(DbEntry.seeded(d, r0, 1.0, 1e-3, px, BENCH_Z[d]))
    return db


@pytest.fixture()
def bench_db():
    return build_bench_db()
