#!/usr/bin/env python3
"""
Entry point for the treecorr management commands.

Usage: ./manage.sh treecorr tree validate treecorr/fixtures/golden_d5.json
"""
import os
import sys

import confy

BASE_DIR = os.path.dirname(os.path.abspath(__file__))

for dot_env in {os.path.join(os.getcwd(), ".env"), os.path.join(BASE_DIR, ".env")}:
    if os.path.exists(dot_env):
        confy.read_environment_file(dot_env)

if __name__ == "__main__":
    os.environ.setdefault("DJANGO_SETTINGS_MODULE", "treecorr.settings")
    from django.core.management import execute_from_command_line

    execute_from_command_line(sys.argv)
