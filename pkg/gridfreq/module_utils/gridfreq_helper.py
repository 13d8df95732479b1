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

import argparse
import json
import logging
import os
import sys
import traceback

from collections import OrderedDict, defaultdict
from contextlib import contextmanager
from dataclasses import dataclass
from typing import Optional

import inflection
import yaml

from gridfreq.doc_fragments.gridfreq import ModuleDocFragment


logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_SIMULATION = 1
EXIT_USAGE = 2


class GridfreqException(Exception):
    pass


class NetworkStructureError(GridfreqException):
    pass


class NetworkSolverError(GridfreqException):

    def __init__(self, msg, mismatch=None, iterations=None):
        super(NetworkSolverError, self).__init__(msg)
        self.mismatch = mismatch
        self.iterations = iterations


class InfeasibleFlowError(NetworkSolverError):
    pass


class SimulationError(GridfreqException):

    def __init__(self, msg, time=None):
        super(SimulationError, self).__init__(msg)
        self.time = time


class InstabilityError(SimulationError):
    pass


class ScenarioValidationError(GridfreqException):

    def __init__(self, msg, path=None):
        if path:
            msg = '{0}: {1}'.format(path, msg)
        super(ScenarioValidationError, self).__init__(msg)
        self.path = path


class MetricsError(GridfreqException):
    pass


class ReducedModelError(GridfreqException):
    pass


_TYPE_COERCION = {
    'str': str,
    'int': int,
    'float': float,
    'bool': bool,
    'path': str,
}


def _coerce(value, value_type, path):
    if value_type in ('raw', 'dict', 'list') or value_type is None:
        return value
    if value_type == 'bool':
        if isinstance(value, bool):
            return value
        raise ScenarioValidationError("expected a boolean, got '{0}'".format(value), path)
    if value_type in ('int', 'float') and isinstance(value, bool):
        raise ScenarioValidationError("expected a number, got '{0}'".format(value), path)
    try:
        coerced = _TYPE_COERCION[value_type](value)
    except (TypeError, ValueError):
        raise ScenarioValidationError("expected type {0}, got '{1}'".format(value_type, value), path)
    if value_type == 'int' and isinstance(value, float) and coerced != value:
        raise ScenarioValidationError("expected an integer, got '{0}'".format(value), path)
    return coerced


def check_spec(data, spec, path, mutually_exclusive=None, required_one_of=None):
    """Validate one mapping against a declarative spec.

    The spec has the same shape as our command `gridfreq_spec` entries:
    ``dict(key=dict(type='float', required=True, default=..., choices=[...], aliases=[...]))``.

    :param data: mapping read from the scenario file
    :param spec: declarative spec for that mapping
    :param path: path of the mapping inside the document, used in messages
    :param mutually_exclusive: list of key groups of which only one may be set
    :param required_one_of: list of key groups of which exactly one has to be set

    :return: a new dict with defaults applied and values coerced
    :rtype: dict
    """
    if data is None:
        data = {}
    if not isinstance(data, dict):
        raise ScenarioValidationError('expected a mapping', path)

    aliases = {alias: key for key, value in spec.items() for alias in value.get('aliases', [])}
    data = {aliases.get(k, k): v for k, v in data.items()}

    unknown = sorted(set(data) - set(spec))
    if unknown:
        raise ScenarioValidationError("unsupported parameters: {0}".format(', '.join(str(u) for u in unknown)), path)

    for group in mutually_exclusive or []:
        present = [k for k in group if data.get(k) is not None]
        if len(present) > 1:
            raise ScenarioValidationError('parameters are mutually exclusive: {0}'.format('|'.join(group)), path)

    for group in required_one_of or []:
        if not any(data.get(k) is not None for k in group):
            raise ScenarioValidationError('one of the following is required: {0}'.format(', '.join(group)), path)

    result = {}
    for key, value_spec in spec.items():
        sub_path = '{0}.{1}'.format(path, key) if path else key
        value = data.get(key)
        if value is None:
            if value_spec.get('required', False):
                raise ScenarioValidationError('missing required parameter', sub_path)
            value = value_spec.get('default')
            result[key] = value
            continue
        value = _coerce(value, value_spec.get('type', 'str'), sub_path)
        choices = value_spec.get('choices')
        if choices is not None and value not in choices:
            raise ScenarioValidationError("value must be one of: {0}, got: {1}".format(', '.join(str(c) for c in choices), value), sub_path)
        result[key] = value

    return result


@dataclass(frozen=True)
class RunOutputs:
    """Files written by one command invocation."""

    timeseries: Optional[str] = None
    metrics: Optional[str] = None
    portrait: Optional[str] = None
    log: Optional[str] = None

    def as_dict(self):
        return OrderedDict((k, v) for k, v in self.__dict__.items() if v is not None)


class GridfreqModule(object):
    """ Baseclass for all gridfreq commands.

        Here we handle the options every command shares: the output directory,
        verbosity and the simulation overrides.
    """

    def __init__(self, argv=None, **kwargs):
        """Generate GridfreqModule."""
        self._outputs = defaultdict(list)
        self._result = OrderedDict()
        self._log_handlers = []

        self.command_name = kwargs.pop('command_name', self.command_name_from_class)
        self.documentation = self._load_documentation(kwargs.pop('documentation', ''))

        self.gridfreq_spec, gen_args = self._gridfreq_spec_helper(kwargs.pop('gridfreq_spec', {}))
        argument_spec = dict(
            out=dict(type='path', aliases=['o'], default='out'),
            verbose=dict(type='bool', aliases=['v']),
            dt=dict(type='float'),
            duration=dict(type='float'),
            window=dict(type='float'),
            stride=dict(type='int'),
        )
        argument_spec.update(gen_args)
        argument_spec.update(kwargs.pop('argument_spec', {}))
        self.argument_spec = argument_spec
        self.mutually_exclusive = kwargs.pop('mutually_exclusive', [])
        self.required_together = kwargs.pop('required_together', [])

        parser = self._build_parser()
        self.params = vars(parser.parse_args(argv))
        self.gridfreq_params = {k: v for (k, v) in self.params.items() if v is not None and v is not False}

        self._check_constraints()

    @property
    def command_name_from_class(self):
        """ Convert class name to command name.

        The class name must follow folowing name convention:
            * Starts with Gridfreq
            * Ends with Module

            This will convert GridfreqMyCommandModule class name to my_command command name.
            eg:
            * GridfreqRunModule => run
            * GridfreqSweepModule => sweep
        """
        class_name_parts = inflection.underscore(self.__class__.__name__).split('_')[1:-1]
        return '_'.join(class_name_parts)

    @property
    def overrides(self):
        """Simulation overrides given on the command line."""
        return {k: self.gridfreq_params[k] for k in ('dt', 'duration', 'window', 'stride') if k in self.gridfreq_params}

    @property
    def out_dir(self):
        return self.params['out']

    def _load_documentation(self, documentation):
        doc = yaml.safe_load(documentation) if documentation else {}
        doc = doc or {}
        options = OrderedDict()
        for fragment in doc.get('extends_documentation_fragment', []):
            options.update(yaml.safe_load(getattr(ModuleDocFragment, fragment.upper(), '')).get('options', {}))
        options.update(doc.get('options') or {})
        doc['options'] = options
        return doc

    def _option_help(self, key):
        description = self.documentation['options'].get(key, {}).get('description', '')
        if isinstance(description, list):
            description = ' '.join(description)
        return description

    def _gridfreq_spec_helper(self, spec):
        """
        Create argparse compatible argument_spec and
        keep gridfreq_spec for the command itself.
        """
        gridfreq_spec = {}
        argument_spec = {}

        _GRIDFREQ_SPEC_KEYS = {
            'elements',
            'invisible',
        }

        for key, value in spec.items():
            gridfreq_spec[key] = dict(value)
            if not value.get('invisible', False):
                argument_spec[key] = {k: v for (k, v) in value.items() if k not in _GRIDFREQ_SPEC_KEYS}
                if value.get('type') == 'list':
                    argument_spec[key]['elements'] = value.get('elements', 'str')

        return gridfreq_spec, argument_spec

    def _build_parser(self):
        parser = argparse.ArgumentParser(
            prog='gridfreq {0}'.format(self.command_name),
            description=self.documentation.get('short_description'),
        )
        for key, value in self.argument_spec.items():
            flags = []
            if value.get('positional', False):
                flags.append(key)
            else:
                flags.append('--{0}'.format(inflection.dasherize(key)))
                for alias in value.get('aliases', []):
                    flags.append('-{0}'.format(alias) if len(alias) == 1 else '--{0}'.format(inflection.dasherize(alias)))

            kwargs = dict(help=self._option_help(key))
            value_type = value.get('type', 'str')
            if value_type == 'bool':
                kwargs['action'] = 'store_true'
            elif value_type == 'list':
                element_type = _TYPE_COERCION[value.get('elements', 'str')]
                kwargs['type'] = lambda text, element_type=element_type: [element_type(e.strip()) for e in text.split(',') if e.strip()]
            else:
                kwargs['type'] = _TYPE_COERCION[value_type]
            if 'choices' in value:
                kwargs['choices'] = value['choices']
            if 'default' in value:
                kwargs['default'] = value['default']
            if not value.get('positional', False):
                kwargs['dest'] = key
                if value.get('required', False):
                    kwargs['required'] = True
            parser.add_argument(*flags, **kwargs)
        return parser

    def _check_constraints(self):
        for group in self.mutually_exclusive:
            present = [k for k in group if k in self.gridfreq_params]
            if len(present) > 1:
                self.fail_json(msg='parameters are mutually exclusive: {0}'.format('|'.join(group)), rc=EXIT_USAGE)
        for group in self.required_together:
            present = [k for k in group if k in self.gridfreq_params]
            if present and len(present) != len(group):
                self.fail_json(msg='parameters are required together: {0}'.format(', '.join(group)), rc=EXIT_USAGE)

    def _start_logging(self):
        package_logger = logging.getLogger('gridfreq')
        package_logger.setLevel(logging.DEBUG if self.params.get('verbose') else logging.INFO)

        stream = logging.StreamHandler(sys.stderr)
        stream.setFormatter(logging.Formatter('%(levelname)s %(name)s: %(message)s'))
        log_path = os.path.join(self.out_dir, '{0}.log'.format(self.command_name))
        logfile = logging.FileHandler(log_path, mode='w', encoding='utf-8')
        logfile.setFormatter(logging.Formatter('%(asctime)s %(levelname)s %(name)s: %(message)s'))

        for handler in (stream, logfile):
            package_logger.addHandler(handler)
            self._log_handlers.append(handler)
        self.record_output('log', log_path)

        logger.info("gridfreq %s: options %s", self.command_name, json.dumps(self.gridfreq_params, sort_keys=True, default=str))

    def _stop_logging(self):
        package_logger = logging.getLogger('gridfreq')
        for handler in self._log_handlers:
            handler.close()
            package_logger.removeHandler(handler)
        self._log_handlers = []

    @contextmanager
    def simulation_session(self):
        """Context manager.

        Run a given code block after the output directory is ready.
        If the execution is done call `exit_json` to report the command has finished,
        errors are mapped onto the exit codes documented for the command line.
        """
        try:
            os.makedirs(self.out_dir, exist_ok=True)
            self._start_logging()
        except OSError as e:
            self.fail_json(msg="Can not prepare output directory '{0}': {1}".format(self.out_dir, e), rc=EXIT_USAGE)

        try:
            yield
        except ScenarioValidationError as e:
            self._stop_logging()
            self.fail_json(msg=str(e), rc=EXIT_USAGE)
        except (IOError, OSError) as e:
            self._stop_logging()
            self.fail_json(msg=str(e), rc=EXIT_USAGE)
        except GridfreqException as e:
            self._stop_logging()
            self.fail_json(msg=str(e), rc=EXIT_SIMULATION, exception=traceback.format_exc())
        self._stop_logging()
        self.exit_json()

    def record_output(self, kind, path):
        self._outputs[kind].append(path)

    def set_result(self, key, value):
        self._result[key] = value

    def exit_json(self, **kwargs):
        kwargs['failed'] = False
        kwargs.setdefault('outputs', dict(self._outputs))
        for key, value in self._result.items():
            kwargs.setdefault(key, value)
        print(json.dumps(kwargs, sort_keys=True, default=str))
        sys.exit(EXIT_OK)

    def fail_json(self, msg, rc=EXIT_SIMULATION, **kwargs):
        kwargs['failed'] = True
        kwargs['msg'] = msg
        kwargs['rc'] = rc
        if self._outputs:
            kwargs.setdefault('outputs', dict(self._outputs))
        print(json.dumps(kwargs, sort_keys=True, default=str), file=sys.stderr)
        sys.exit(rc)
