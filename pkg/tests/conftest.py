"""Shared fixtures: expensive seeded gain batches built once per session."""

import pytest

from noma_ec.channel import sample_ordered


@pytest.fixture(scope="session")
def batch2():
    """10^6 two-user ranked gain samples, the default validation batch."""
    return sample_ordered(2, 10**6, 12345)


@pytest.fixture(scope="session")
def batch4():
    """10^6 four-user ranked gain samples for the pairing checks."""
    return sample_ordered(4, 10**6, 12345)
