from specprep._version import __version__

ascii_art = rf"""
 ___ _ __   ___  ___ _ __  _ __ ___ _ __
/ __| '_ \ / _ \/ __| '_ \| '__/ _ \ '_ \
\__ \ |_) |  __/ (__| |_) | | |  __/ |_) |
|___/ .__/ \___|\___| .__/|_|  \___| .__/
    |_|             |_|            |_|

Log early, scale late, randomize plates before you measure.

Version: {__version__}

MIT License
"""
