import math

IDENTICAL = "identical"


def format_value(value):
    """Render a report value so repeated runs print identical text."""
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, int):
        return str(value)
    if isinstance(value, float):
        if math.isinf(value) and value > 0:
            return IDENTICAL
        if value == 0:
            return "0"
        return f"{value:.10g}"
    if isinstance(value, (list, tuple)):
        return ",".join(format_value(item) for item in value)
    return str(value)


class CommandReport:
    """Ordered key=value report printed by every command."""

    def __init__(self, **fields):
        self._fields = {}
        self.update(**fields)

    def add(self, key, value):
        self._fields[key] = value
        return self

    def update(self, **fields):
        for key, value in fields.items():
            self.add(key, value)
        return self

    def extend(self, prefix, fields):
        for key, value in fields.items():
            self.add(f"{prefix}{key}", value)
        return self

    def __getitem__(self, key):
        return self._fields[key]

    def __contains__(self, key):
        return key in self._fields

    def render(self):
        return "\n".join(
            f"{key}={format_value(value)}" for key, value in self._fields.items()
        )

    @staticmethod
    def parse(text):
        """Read a rendered report back into a dict of strings."""
        pairs = {}
        for line in text.splitlines():
            key, sep, value = line.partition("=")
            if sep:
                pairs[key.strip()] = value.strip()
        return pairs
