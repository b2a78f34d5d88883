import configparser
import logging
import pathlib

import pkg_resources
from mopidy import config

__version__ = pkg_resources.get_distribution("Bidder-Selection").version

logger = logging.getLogger(__name__)


class ConfigError(ValueError):
    def __init__(self, errors):
        self.errors = dict(errors)
        lines = [f"{key}: {message}" for key, message in sorted(self.errors.items())]
        super().__init__("invalid configuration:\n  " + "\n  ".join(lines))


class Float(config.ConfigValue):
    """Real-valued setting with optional bounds, in the style of config.Integer."""

    def __init__(self, minimum=None, maximum=None, optional=False):
        self._minimum = minimum
        self._maximum = maximum
        self._optional = optional

    def deserialize(self, value):
        value = value.strip()
        if not value:
            if self._optional:
                return None
            raise ValueError("must be set.")
        try:
            result = float(value)
        except ValueError:
            raise ValueError(f"{value!r} is not a number.")
        if self._minimum is not None and result < self._minimum:
            raise ValueError(f"{result!r} must be larger than {self._minimum!r}.")
        if self._maximum is not None and result > self._maximum:
            raise ValueError(f"{result!r} must be smaller than {self._maximum!r}.")
        return result

    def serialize(self, value, display=False):
        if value is None:
            return ""
        return repr(float(value))


class Duration(config.ConfigValue):
    """Seconds, either a plain number or an ISO-8601 duration such as PT10M."""

    def deserialize(self, value):
        from bidder_selection.timeformat import parse_duration

        value = value.strip()
        if not value:
            raise ValueError("must be set.")
        seconds = parse_duration(value)
        if seconds <= 0:
            raise ValueError(f"{value!r} is not a positive duration.")
        return seconds

    def serialize(self, value, display=False):
        return repr(float(value))


class Extension:

    dist_name = "Bidder-Selection"
    ext_name = "bidder_selection"
    version = __version__

    def get_default_config(self):
        return config.read(pathlib.Path(__file__).parent / "ext.conf")

    def get_config_schema(self):
        solver = config.ConfigSchema("solver")
        solver["initial_step"] = Float(minimum=0.0)
        solver["backtrack_factor"] = Float(minimum=0.0, maximum=1.0)
        solver["armijo"] = Float(minimum=0.0, maximum=1.0)
        solver["tol"] = Float(minimum=0.0)
        solver["max_iters"] = config.Integer(minimum=1)
        solver["step_rule"] = config.String(choices=["constant", "bb"])
        solver["small_tail_delta"] = Float(minimum=0.0, maximum=1.0)

        rounding = config.ConfigSchema("rounding")
        rounding["trials"] = config.Integer(minimum=1)

        baselines = config.ConfigSchema("baselines")
        baselines["brute_force_cap"] = config.Integer(minimum=1)
        baselines["local_search_max_sweeps"] = config.Integer(minimum=0)
        baselines["lazy_greedy"] = config.Boolean()

        bench = config.ConfigSchema("bench")
        bench["seeds"] = config.Integer(minimum=1)
        bench["base_seed"] = config.Integer(minimum=0)
        bench["timeout"] = Duration()
        bench["grid_size"] = config.Integer(minimum=2)
        bench["prng"] = config.String(choices=["pcg64", "philox", "sfc64"])
        bench["parallel"] = config.Boolean()
        bench["single_thread"] = config.Boolean()
        bench["include_large"] = config.Boolean()
        bench["output_dir"] = config.String(optional=True)

        return {
            schema.name: schema for schema in (solver, rounding, baselines, bench)
        }

    def load_config(self, files=(), overrides=()):
        """
        Merge the packaged defaults, user INI files and ``section/key=value``
        overrides, then validate every section against its schema.
        """
        parser = configparser.RawConfigParser()
        parser.read_string(self.get_default_config(), source="ext.conf")
        for path in files:
            try:
                with open(path) as infile:
                    parser.read_file(infile, source=str(path))
            except OSError as e:
                raise ConfigError({str(path): f"cannot read config file: {e}"})
            except configparser.Error as e:
                raise ConfigError({str(path): str(e)})

        errors = {}
        for override in overrides:
            try:
                key, value = override.split("=", 1)
                section, option = key.strip().split("/", 1)
            except ValueError:
                errors[override] = "override must look like section/key=value."
                continue
            if not parser.has_section(section):
                errors[override] = f"unknown config section {section!r}."
                continue
            parser.set(section, option, value.strip())

        result = {}
        for name, schema in self.get_config_schema().items():
            values = dict(parser.items(name)) if parser.has_section(name) else {}
            section, section_errors = schema.deserialize(values)
            errors.update(
                {f"{name}/{key}": message for key, message in section_errors.items()}
            )
            result[name] = section
        if errors:
            raise ConfigError(errors)
        logger.debug(f"loaded configuration from {['ext.conf', *map(str, files)]}")
        return result

    def validate_section(self, name, values, base=None):
        """
        Validate a JSON-style block (already typed values) through the same
        schema as the INI settings. Missing keys keep their ``base`` value.
        """
        schema = self.get_config_schema().get(name)
        if schema is None:
            raise ConfigError({name: "unknown config section."})
        merged = {
            key: schema[key].serialize(value)
            for key, value in (base or {}).items()
            if key in schema
        }
        for key, value in values.items():
            if isinstance(value, bool):
                merged[key] = "true" if value else "false"
            elif value is None:
                merged[key] = ""
            else:
                merged[key] = str(value)
        section, errors = schema.deserialize(merged)
        if errors:
            raise ConfigError(
                {f"{name}/{key}": message for key, message in errors.items()}
            )
        return section
