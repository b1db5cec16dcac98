from fractions import Fraction
from pathlib import Path

import pytest

from brpop.model import PopulationProfile

F = Fraction


@pytest.fixture(scope="session")
def configs_dir() -> Path:
    return Path(__file__).resolve().parent.parent / "configs"


@pytest.fixture(scope="session")
def profile_1a2c() -> PopulationProfile:
    """One anticoordinating and two coordinating subpopulations."""
    return PopulationProfile(
        anti_rho=(F(3, 5),),
        anti_tau=(F(17, 20),),
        coord_rho=(F(1, 10), F(3, 10)),
        coord_tau=(F(7, 20), F(3, 4)),
    )


@pytest.fixture(scope="session")
def profile_3a4c() -> PopulationProfile:
    """Three anticoordinating and four coordinating subpopulations.

    Degenerate by construction: two cumulative sums hit the third
    coordinator threshold 1/2, but neither coincidence is active.
    """
    return PopulationProfile(
        anti_rho=(F(1, 14), F(3, 28), F(3, 28)),
        anti_tau=(F(13, 14), F(6, 7), F(5, 14)),
        coord_rho=(F(3, 28), F(3, 28), F(2, 7), F(3, 14)),
        coord_tau=(F(1, 20), F(9, 28), F(1, 2), F(9, 14)),
    )


@pytest.fixture(scope="session")
def profile_1a5c() -> PopulationProfile:
    """One anticoordinating and five coordinating subpopulations."""
    return PopulationProfile(
        anti_rho=(F(2, 5),),
        anti_tau=(F(177, 200),),
        coord_rho=(F(4, 15), F(1, 30), F(1, 10), F(1, 10), F(1, 10)),
        coord_tau=(
            F(21, 100),
            F(111, 250),
            F(481, 1000),
            F(151, 250),
            F(89, 100),
        ),
    )


@pytest.fixture(scope="session")
def profile_coord_unit() -> PopulationProfile:
    """A single coordinating subpopulation at threshold one half."""
    return PopulationProfile(
        anti_rho=(),
        anti_tau=(),
        coord_rho=(F(1),),
        coord_tau=(F(1, 2),),
    )


@pytest.fixture(scope="session")
def profile_single_anti() -> PopulationProfile:
    """A single anticoordinating subpopulation."""
    return PopulationProfile(
        anti_rho=(F(1),),
        anti_tau=(F(3, 5),),
        coord_rho=(),
        coord_tau=(),
    )
