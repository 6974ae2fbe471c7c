import json

_decoder = json.JSONDecoder()


def find_object_arrays(text: str, start: int = 0):
    """Yield ``(array, end_offset)`` for each JSON array of objects in ``text``.

    Arrays are found by attempting a JSON decode at every ``[``; anything that
    decodes to a list whose items are all objects qualifies (``[]`` included).
    Nested arrays inside a qualifying array are not reported separately.
    """
    pos = text.find("[", start)
    while pos != -1:
        try:
            value, end = _decoder.raw_decode(text, pos)
        except json.JSONDecodeError:
            pos = text.find("[", pos + 1)
            continue
        if isinstance(value, list) and all(isinstance(v, dict) for v in value):
            yield value, end
            pos = text.find("[", end)
        else:
            pos = text.find("[", pos + 1)


def first_object_array(text: str, start: int = 0, allow_empty: bool = True):
    for value, end in find_object_arrays(text, start):
        if value or allow_empty:
            return value, end
    return None, -1
