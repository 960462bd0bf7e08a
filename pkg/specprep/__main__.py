from specprep import _cli

_cli.app(prog_name="specprep")
