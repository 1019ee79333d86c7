from importlib import resources

from sysgraph import load_model


def fixture(name):
    """Load one of the bundled .sg models by stem."""
    return load_model(str(resources.files("sysgraph").joinpath("fixtures", f"{name}.sg")))
