from hypothesis import settings

settings.register_profile("mellinbranch", max_examples=25, deadline=None)
settings.load_profile("mellinbranch")


def pytest_configure(config):
    config.addinivalue_line("markers", "slow: large Monte Carlo runs checked against limit laws")
