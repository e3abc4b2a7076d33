# Copyright 2026 pyfedreid authors. See LICENSE file for details.

"""
dump_params and parse_params convert between a :class:`ParamSet` and its
file representation; save_params and load_params do the same with a path.

The representation is a text header followed by a binary body.

Format:
- the first line is the magic string ``FEDREID-PARAMS 1``
- the second line is the number of layers
- then one line per layer, in layer order: the layer name, a single space
  and the number of values in the layer
- the body is every value of every layer, in layer order, as little-endian
  64-bit IEEE floats; it has exactly ``8 * sum(lengths)`` bytes
- layer names must not contain a newline

Values are stored bit-exactly, so two files are byte-identical if and only
if their parameter sets are.
"""

import numpy as np

from . import exceptions
from ._constants import PARAMS_MAGIC
from ._params import ParamSet

_VALUE_DTYPE = np.dtype('<f8')


def dump_params(params):
    """
    Serialize a parameter set.

    :param ParamSet params: the parameter set.
    :return: the file contents.
    :rtype: bytes
    :raises UsageError: if a layer name contains a newline.
    """
    header = [PARAMS_MAGIC, str(params.layer_count)]
    for name, length in zip(params.names, params.lengths):
        if '\n' in name:
            raise exceptions.UsageError(name)
        header.append('%s %d' % (name, length))
    body = b''.join(values.astype(_VALUE_DTYPE).tobytes() for _, values in params.layers())
    return ('\n'.join(header) + '\n').encode('utf-8') + body


def parse_params(data, name='<params>'):
    """
    Deserialize a parameter set.

    :param bytes data: the file contents.
    :param str name: the file name used in error messages.
    :rtype: ParamSet
    :raises MalformedFile: if the data does not follow the format.
    """
    pos = 0
    lines = []
    expected = 2
    while len(lines) < expected:
        end = data.find(b'\n', pos)
        if end < 0:
            raise exceptions.MalformedFile('%s:%d' % (name, len(lines) + 1), 'Truncated header')
        try:
            lines.append(data[pos:end].decode('utf-8'))
        except UnicodeDecodeError:
            raise exceptions.MalformedFile('%s:%d' % (name, len(lines) + 1))
        pos = end + 1
        if len(lines) == 1 and lines[0] != PARAMS_MAGIC:
            raise exceptions.MalformedFile('%s:1' % (name,), 'Not a parameter set file')
        if len(lines) == 2:
            expected = 2 + _parse_count(lines[1], '%s:2' % (name,))

    layers = []
    for lineno, line in enumerate(lines[2:], 3):
        layer_name, sep, length = line.rpartition(' ')
        if not sep or not layer_name:
            raise exceptions.MalformedFile('%s:%d' % (name, lineno), 'Bad layer line')
        layers.append((layer_name, _parse_count(length, '%s:%d' % (name, lineno))))

    total = sum(length for _, length in layers)
    body = data[pos:]
    if len(body) != total * _VALUE_DTYPE.itemsize:
        raise exceptions.MalformedFile(
            '%s: body has %d bytes, expected %d' % (name, len(body), total * _VALUE_DTYPE.itemsize))
    values = np.frombuffer(body, dtype=_VALUE_DTYPE).astype(np.float64)
    offsets = np.cumsum([0] + [length for _, length in layers])
    try:
        return ParamSet((layer_name, values[offsets[idx]:offsets[idx + 1]])
                        for idx, (layer_name, _) in enumerate(layers))
    except exceptions.FedReIDError as e:
        raise exceptions.MalformedFile('%s: %s' % (name, e))


def save_params(params, path):
    with open(path, 'wb') as f:
        f.write(dump_params(params))


def load_params(path):
    """
    Read a parameter set file.

    :param str path: the file path.
    :rtype: ParamSet
    :raises MalformedFile: if the file does not follow the format.
    """
    with open(path, 'rb') as f:
        return parse_params(f.read(), path)


def _parse_count(text, where):
    try:
        count = int(text)
    except ValueError:
        raise exceptions.MalformedFile(where, 'Bad count')
    if count < 0:
        raise exceptions.MalformedFile(where, 'Bad count')
    return count


# vim: softtabstop=4 tabstop=4 expandtab shiftwidth=4
