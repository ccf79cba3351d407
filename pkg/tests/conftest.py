import math

import pytest
from sqlalchemy import create_engine
from sqlalchemy.orm import sessionmaker

from database_models import Base
from model import PerturbationProfile, PrivacyModel, RKind

LN4 = math.log(4)
LN6 = math.log(6)


@pytest.fixture
def toy_model():
    """Five items: item 1 at ln4, items 2..5 at ln6."""
    return PrivacyModel.from_level_sizes((LN4, LN6), (1, 4), RKind.MIN)


@pytest.fixture
def toy_profile():
    """Rounded two-level profile of the five-item toy setting."""
    return PerturbationProfile((0.59, 0.67), (0.33, 0.28)).with_dummy_from_level(0)


@pytest.fixture
def rappor_ln4():
    return PerturbationProfile.uniform(2.0 / 3.0, 1.0 / 3.0, 1)


@pytest.fixture
def db_session():
    engine = create_engine("sqlite:///:memory:")
    Base.metadata.create_all(bind=engine)
    session = sessionmaker(autocommit=False, autoflush=False, bind=engine)()
    try:
        yield session
    finally:
        session.close()
        engine.dispose()
