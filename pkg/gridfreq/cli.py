# -*- coding: utf-8 -*-
# (c) The gridfreq authors 2026
#
# This program is free software: you can redistribute it and/or modify
# it under the terms of the GNU General Public License as published by
# the Free Software Foundation, either version 3 of the License, or
# (at your option) any later version.
#
# This program is distributed in the hope that it will be useful,
# but WITHOUT ANY WARRANTY; without even the implied warranty of
# MERCHANTABILITY or FITNESS FOR A PARTICULAR PURPOSE.  See the
# GNU General Public License for more details.
#
# You should have received a copy of the GNU General Public License
# along with this program.  If not, see <http://www.gnu.org/licenses/>.

"""``gridfreq <command> [options]`` entry point."""

import importlib
import sys

import yaml

from gridfreq import __version__
from gridfreq.module_utils.gridfreq_helper import EXIT_USAGE


COMMANDS = ('run', 'sweep', 'portrait')


def _usage():
    lines = ['usage: gridfreq {{{0}}} ...'.format(','.join(COMMANDS)), '', 'commands:']
    for name in COMMANDS:
        module = importlib.import_module('gridfreq.modules.{0}'.format(name))
        lines.append('  {0:<10} {1}'.format(name, yaml.safe_load(module.DOCUMENTATION)['short_description']))
    return '\n'.join(lines)


def main(argv=None):
    argv = sys.argv[1:] if argv is None else list(argv)
    if not argv or argv[0] in ('-h', '--help'):
        print(_usage())
        sys.exit(0 if argv else EXIT_USAGE)
    if argv[0] == '--version':
        print('gridfreq {0}'.format(__version__))
        sys.exit(0)
    if argv[0] not in COMMANDS:
        print("gridfreq: unknown command '{0}'\n\n{1}".format(argv[0], _usage()), file=sys.stderr)
        sys.exit(EXIT_USAGE)

    module = importlib.import_module('gridfreq.modules.{0}'.format(argv[0]))
    module.main(argv[1:])


if __name__ == '__main__':
    main()
