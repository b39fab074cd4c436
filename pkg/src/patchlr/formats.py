"""File formats: PGM images, IDX tensors, sinograms, and result CSVs."""

import numpy as np

from .errors import FormatError, InvalidArgumentError

_IDX_IMAGES = 0x00000803
_IDX_LABELS = 0x00000801


class _PgmScanner:
    """Tokenizer over a PGM header that tracks byte offsets for error
    reporting."""

    def __init__(self, blob, path):
        self.blob = blob
        self.path = path
        self.pos = 0

    def fail(self, message):
        raise FormatError(f"{self.path}: {message}", offset=self.pos)

    def skip_separators(self):
        blob = self.blob
        while self.pos < len(blob):
            b = blob[self.pos]
            if b in b"#":
                while self.pos < len(blob) and blob[self.pos] not in b"\n":
                    self.pos += 1
            elif b in b" \t\r\n\v\f":
                self.pos += 1
            else:
                return
        self.fail("unexpected end of header")

    def token(self):
        self.skip_separators()
        start = self.pos
        self.last_start = start
        blob = self.blob
        while self.pos < len(blob) and blob[self.pos] not in b" \t\r\n\v\f#":
            self.pos += 1
        if self.pos == start:
            self.fail("expected a header token")
        return blob[start:self.pos]

    def int_token(self):
        tok = self.token()
        try:
            return int(tok)
        except ValueError:
            self.pos = self.last_start
            self.fail(f"expected an integer, got {tok!r}")


def read_pgm(path):
    """Read a P2 (ASCII) or P5 (binary) PGM file as a float64 array in
    [0, 255]. Only maxval 255 is accepted."""
    with open(path, "rb") as fh:
        blob = fh.read()
    sc = _PgmScanner(blob, str(path))
    magic = sc.token()
    if magic not in (b"P2", b"P5"):
        sc.pos = 0
        sc.fail(f"not a PGM file (magic {magic!r})")
    width = sc.int_token()
    height = sc.int_token()
    if width < 1 or height < 1:
        sc.fail(f"bad dimensions {width}x{height}")
    maxval = sc.int_token()
    if maxval != 255:
        sc.pos = sc.last_start
        sc.fail(f"unsupported maxval {maxval} (only 255)")
    count = width * height
    if magic == b"P5":
        if sc.pos >= len(blob) or blob[sc.pos] not in b" \t\r\n\v\f":
            sc.fail("missing whitespace after maxval")
        sc.pos += 1
        if len(blob) - sc.pos < count:
            sc.pos = len(blob)
            sc.fail(f"truncated pixel data (need {count} bytes)")
        data = np.frombuffer(blob[sc.pos:sc.pos + count], dtype=np.uint8)
    else:
        values = []
        for _ in range(count):
            v = sc.int_token()
            if not 0 <= v <= 255:
                sc.fail(f"sample {v} out of range 0..255")
            values.append(v)
        data = np.array(values, dtype=np.uint8)
    return data.reshape(height, width).astype(np.float64)


def write_pgm(img, path, binary=True):
    """Write an image as PGM, rounding and clipping to 8 bits."""
    img = np.asarray(img, dtype=np.float64)
    if img.ndim != 2:
        raise InvalidArgumentError("image must be 2-D")
    data = np.clip(np.rint(img), 0, 255).astype(np.uint8)
    h, w = data.shape
    if binary:
        with open(path, "wb") as fh:
            fh.write(f"P5\n{w} {h}\n255\n".encode("ascii"))
            fh.write(data.tobytes())
    else:
        with open(path, "w") as fh:
            fh.write(f"P2\n{w} {h}\n255\n")
            for row in data:
                fh.write(" ".join(str(int(v)) for v in row))
                fh.write("\n")


def read_idx(path):
    """Read an IDX file of unsigned bytes.

    Magic 0x00000803 parses as a 3-D image tensor, 0x00000801 as a 1-D label
    array. Returns (dims, uint8 array).
    """
    with open(path, "rb") as fh:
        blob = fh.read()
    if len(blob) < 4:
        raise FormatError(f"{path}: too short for an IDX magic", offset=len(blob))
    magic = int.from_bytes(blob[:4], "big")
    if magic == _IDX_IMAGES:
        ndim = 3
    elif magic == _IDX_LABELS:
        ndim = 1
    else:
        raise FormatError(f"{path}: unsupported IDX magic {magic:#010x}", offset=0)
    header = 4 + 4 * ndim
    if len(blob) < header:
        raise FormatError(f"{path}: truncated dimension list", offset=len(blob))
    dims = tuple(
        int.from_bytes(blob[4 + 4 * i:8 + 4 * i], "big") for i in range(ndim)
    )
    count = int(np.prod(dims))
    if len(blob) - header < count:
        raise FormatError(
            f"{path}: payload needs {count} bytes, file has {len(blob) - header}",
            offset=len(blob),
        )
    data = np.frombuffer(blob[header:header + count], dtype=np.uint8)
    return dims, data.reshape(dims)


def write_idx(path, arr):
    """Write a uint8 array as IDX (1-D labels or 3-D images)."""
    arr = np.ascontiguousarray(arr, dtype=np.uint8)
    if arr.ndim == 3:
        magic = _IDX_IMAGES
    elif arr.ndim == 1:
        magic = _IDX_LABELS
    else:
        raise InvalidArgumentError("IDX writer supports 1-D or 3-D uint8 arrays")
    with open(path, "wb") as fh:
        fh.write(magic.to_bytes(4, "big"))
        for d in arr.shape:
            fh.write(int(d).to_bytes(4, "big"))
        fh.write(arr.tobytes())


def write_sinogram(sino, path):
    """Write a (views, detectors) sinogram: CSV when the path ends in .csv,
    otherwise raw little-endian float64 after a "views detectors" text line."""
    sino = np.asarray(sino, dtype=np.float64)
    if sino.ndim != 2:
        raise InvalidArgumentError("sinogram must be 2-D (views x detectors)")
    if str(path).endswith(".csv"):
        with open(path, "w") as fh:
            for row in sino:
                fh.write(",".join(repr(float(v)) for v in row))
                fh.write("\n")
    else:
        with open(path, "wb") as fh:
            fh.write(f"{sino.shape[0]} {sino.shape[1]}\n".encode("ascii"))
            fh.write(sino.astype("<f8").tobytes())


def read_sinogram(path):
    """Read a sinogram written by write_sinogram."""
    if str(path).endswith(".csv"):
        rows = []
        with open(path, "r") as fh:
            for ln, line in enumerate(fh, start=1):
                line = line.strip()
                if not line:
                    continue
                try:
                    rows.append([float(v) for v in line.split(",")])
                except ValueError as exc:
                    raise FormatError(f"{path}: bad CSV value on line {ln}") from exc
        if not rows or any(len(r) != len(rows[0]) for r in rows):
            raise FormatError(f"{path}: empty or ragged sinogram CSV")
        return np.array(rows, dtype=np.float64)
    with open(path, "rb") as fh:
        header = fh.readline()
        try:
            views, dets = (int(v) for v in header.split())
        except ValueError as exc:
            raise FormatError(
                f"{path}: bad sinogram header {header!r}", offset=0
            ) from exc
        payload = fh.read()
    need = views * dets * 8
    if len(payload) < need:
        raise FormatError(
            f"{path}: payload needs {need} bytes, file has {len(payload)}",
            offset=len(header) + len(payload),
        )
    return np.frombuffer(payload[:need], dtype="<f8").reshape(views, dets)


def write_labels_csv(labels, path):
    """Write per-point labels as "index,label" rows."""
    with open(path, "w") as fh:
        fh.write("index,label\n")
        for i, v in enumerate(labels):
            fh.write(f"{i},{int(v)}\n")


def write_accuracy_csv(n, labeled, correct, path):
    """Write a one-row accuracy report."""
    with open(path, "w") as fh:
        fh.write("n,labeled,correct,accuracy\n")
        fh.write(f"{n},{labeled},{correct},{correct / n!r}\n")
