from importlib import metadata

# Used to automatically set version number from the installed distribution
# as well as not break when being run from a source checkout
try:
    __version__ = metadata.version(__package__)
except metadata.PackageNotFoundError:  # pragma: no cover
    __version__ = "0.0.0"
