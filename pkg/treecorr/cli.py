"""Console script for the treecorr management command, installed by poetry as ``treecorr``."""
import os
import sys

import confy
from django.core.management.base import CommandError


def main(argv=None):
    """Run ``treecorr <argv>`` and return the exit status instead of exiting."""
    argv = sys.argv[1:] if argv is None else list(argv)
    dot_env = os.path.join(os.getcwd(), ".env")
    if os.path.exists(dot_env):
        confy.read_environment_file(dot_env)
    os.environ.setdefault("DJANGO_SETTINGS_MODULE", "treecorr.settings")

    import django

    django.setup()
    from treecorr.management.commands.treecorr import Command

    try:
        Command().run_from_argv(["treecorr", "treecorr", *argv])
    except SystemExit as e:
        if e.code is None:
            return 0
        return e.code if isinstance(e.code, int) else 1
    except CommandError as e:
        sys.stderr.write(f"{e}\n")
        return e.returncode
    return 0


if __name__ == "__main__":
    sys.exit(main())
