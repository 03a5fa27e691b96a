"""Self-describing little-endian binary artifacts plus PGM dumps.

Three formats, all versioned and magic-tagged:

INSARRAW (raw capture)
    magic 8s, version u32,
    chirp: f64 center_frequency_hz, f64 ramp_slope_hz_per_s,
           u32 samples_per_chirp, f64 sample_rate_sps, f64 pri_s,
           u32 chirps_per_tx_per_frame, u32 num_tx,
    array: u32 n_tx, u32 n_rx, then 3*f64 per element (TX first),
    u64 n_records, then per record:
       u32 tx, u32 rx, u32 cycle, f64 time,
       pose: f64 time, 3*f64 position, 4*f64 quaternion (w, x, y, z),
       samples: 2*N f32 interleaved I/Q.

INSARIMG (image stack)
    magic 8s, version u32,
    grid: f64 origin_u, origin_v, extent_u, extent_v, pixel_size,
    f64 aperture_length, f64 wavelength, 3*f64 phase_center,
    array: u32 n_tx, u32 n_rx, 3*f64 per element,
    u32 n_vx, u32 n_u, u32 n_v,
    per VX one plane of n_u*n_v complex64 (f32 I/Q interleaved), u-major.

INSARELV (elevation map)
    magic 8s, version u32, grid as above, 3*f64 phase_center,
    f64 wavelength, f64 baseline, u32 n_u, u32 n_v,
    five f32 planes: elevation (NaN = absent), mean phase delay,
    circular variance, combined magnitude, snr_db.
"""

from __future__ import annotations

import struct

import numpy as np

from .errors import DataFormatError
from .imaging import ImageGrid, SarImageStack
from .interferometry import ElevationMap, InterferogramGrid
from .simulate import PulseRecord, RawCapture
from .types import ChirpConfig, Pose, build_virtual_array

MAGIC_RAW = b"INSARRAW"
MAGIC_IMG = b"INSARIMG"
MAGIC_ELV = b"INSARELV"
FORMAT_VERSION = 1


def _read_exact(fh, count: int, what: str) -> bytes:
    data = fh.read(count)
    if len(data) != count:
        raise DataFormatError(f"truncated file while reading {what}")
    return data


def _unpack(fh, fmt: str, what: str):
    size = struct.calcsize(fmt)
    return struct.unpack(fmt, _read_exact(fh, size, what))


def _check_header(fh, magic: bytes, path) -> None:
    got = fh.read(len(magic))
    if got != magic:
        raise DataFormatError(f"{path}: bad magic {got!r}, expected {magic!r}")
    (version,) = _unpack(fh, "<I", "version")
    if version != FORMAT_VERSION:
        raise DataFormatError(f"{path}: unsupported format version {version}")


def _write_positions(fh, positions: np.ndarray) -> None:
    fh.write(np.ascontiguousarray(positions, dtype="<f8").tobytes())


def _read_positions(fh, count: int, what: str) -> np.ndarray:
    raw = _read_exact(fh, count * 3 * 8, what)
    return np.frombuffer(raw, dtype="<f8").reshape(count, 3).copy()


def write_capture(capture: RawCapture, path) -> None:
    cfg = capture.config
    with open(path, "wb") as fh:
        fh.write(MAGIC_RAW)
        fh.write(struct.pack("<I", FORMAT_VERSION))
        fh.write(
            struct.pack(
                "<ddIddII",
                cfg.center_frequency_hz,
                cfg.ramp_slope_hz_per_s,
                cfg.samples_per_chirp,
                cfg.sample_rate_sps,
                cfg.pri_s,
                cfg.chirps_per_tx_per_frame,
                cfg.num_tx,
            )
        )
        fh.write(struct.pack("<II", capture.array.n_tx, capture.array.n_rx))
        _write_positions(fh, capture.array.tx_positions)
        _write_positions(fh, capture.array.rx_positions)
        fh.write(struct.pack("<Q", capture.n_records))
        for rec in capture.records:
            fh.write(struct.pack("<IIId", rec.tx, rec.rx, rec.cycle, rec.time_s))
            fh.write(struct.pack("<d", rec.pose.time_s))
            fh.write(np.asarray(rec.pose.position, dtype="<f8").tobytes())
            fh.write(np.asarray(rec.pose.quaternion, dtype="<f8").tobytes())
            iq = np.empty(2 * rec.samples.shape[0], dtype="<f4")
            iq[0::2] = rec.samples.real
            iq[1::2] = rec.samples.imag
            fh.write(iq.tobytes())


def read_capture(path) -> RawCapture:
    with open(path, "rb") as fh:
        _check_header(fh, MAGIC_RAW, path)
        (f_c, slope, n_samp, fs, pri, cptf, n_tx_cfg) = _unpack(fh, "<ddIddII", "chirp config")
        cfg = ChirpConfig(
            center_frequency_hz=f_c,
            ramp_slope_hz_per_s=slope,
            samples_per_chirp=n_samp,
            sample_rate_sps=fs,
            pri_s=pri,
            chirps_per_tx_per_frame=cptf,
            num_tx=n_tx_cfg,
        )
        n_tx, n_rx = _unpack(fh, "<II", "array size")
        tx = _read_positions(fh, n_tx, "TX positions")
        rx = _read_positions(fh, n_rx, "RX positions")
        array = build_virtual_array(tx, rx)
        (n_records,) = _unpack(fh, "<Q", "record count")
        records = []
        pose_cache: dict[bytes, Pose] = {}
        for _ in range(n_records):
            tx_i, rx_i, cycle, time_s = _unpack(fh, "<IIId", "record header")
            pose_raw = _read_exact(fh, 8 * 8, "pose")
            pose = pose_cache.get(pose_raw)
            if pose is None:
                vals = np.frombuffer(pose_raw, dtype="<f8")
                pose = Pose(time_s=float(vals[0]), position=vals[1:4], quaternion=vals[4:8])
                pose_cache[pose_raw] = pose
            iq = np.frombuffer(
                _read_exact(fh, 2 * n_samp * 4, "samples"), dtype="<f4"
            ).astype(np.float64)
            samples = iq[0::2] + 1j * iq[1::2]
            records.append(
                PulseRecord(time_s=time_s, cycle=cycle, tx=tx_i, rx=rx_i, pose=pose, samples=samples)
            )
    return RawCapture(config=cfg, array=array, records=tuple(records))


def _write_grid(fh, grid: ImageGrid) -> None:
    fh.write(
        struct.pack(
            "<5d",
            grid.origin_m[0],
            grid.origin_m[1],
            grid.extent_m[0],
            grid.extent_m[1],
            grid.pixel_size_m,
        )
    )


def _read_grid(fh) -> ImageGrid:
    ou, ov, eu, ev, pix = _unpack(fh, "<5d", "grid")
    return ImageGrid(origin_m=np.array([ou, ov]), extent_m=np.array([eu, ev]), pixel_size_m=pix)


def write_image_stack(stack: SarImageStack, path) -> None:
    with open(path, "wb") as fh:
        fh.write(MAGIC_IMG)
        fh.write(struct.pack("<I", FORMAT_VERSION))
        _write_grid(fh, stack.grid)
        fh.write(struct.pack("<dd", stack.aperture_length_m, stack.wavelength_m))
        fh.write(np.asarray(stack.phase_center, dtype="<f8").tobytes())
        fh.write(struct.pack("<II", stack.array.n_tx, stack.array.n_rx))
        _write_positions(fh, stack.array.tx_positions)
        _write_positions(fh, stack.array.rx_positions)
        fh.write(struct.pack("<III", stack.array.n_vx, stack.grid.n_u, stack.grid.n_v))
        for k in range(stack.array.n_vx):
            plane = np.ascontiguousarray(stack.images[k], dtype="<c8")
            fh.write(plane.tobytes())


def read_image_stack(path) -> SarImageStack:
    with open(path, "rb") as fh:
        _check_header(fh, MAGIC_IMG, path)
        grid = _read_grid(fh)
        aperture_length, wavelength = _unpack(fh, "<dd", "stack header")
        phase_center = np.frombuffer(_read_exact(fh, 24, "phase center"), dtype="<f8").copy()
        n_tx, n_rx = _unpack(fh, "<II", "array size")
        tx = _read_positions(fh, n_tx, "TX positions")
        rx = _read_positions(fh, n_rx, "RX positions")
        array = build_virtual_array(tx, rx)
        n_vx, n_u, n_v = _unpack(fh, "<III", "stack dims")
        if n_vx != array.n_vx:
            raise DataFormatError(f"{path}: VX count {n_vx} does not match array {array.n_vx}")
        if (n_u, n_v) != (grid.n_u, grid.n_v):
            raise DataFormatError(f"{path}: plane dims {(n_u, n_v)} do not match grid")
        images = np.empty((n_vx, n_u, n_v), dtype=np.complex128)
        for k in range(n_vx):
            raw = _read_exact(fh, n_u * n_v * 8, f"image plane {k}")
            images[k] = np.frombuffer(raw, dtype="<c8").reshape(n_u, n_v)
    return SarImageStack(
        grid=grid,
        array=array,
        images=images,
        phase_center=phase_center,
        aperture_length_m=aperture_length,
        wavelength_m=wavelength,
    )


def write_elevation_map(emap: ElevationMap, path) -> None:
    intf = emap.interferogram
    with open(path, "wb") as fh:
        fh.write(MAGIC_ELV)
        fh.write(struct.pack("<I", FORMAT_VERSION))
        _write_grid(fh, emap.grid)
        fh.write(np.asarray(emap.phase_center, dtype="<f8").tobytes())
        fh.write(struct.pack("<dd", emap.wavelength_m, emap.baseline_m))
        fh.write(struct.pack("<II", emap.grid.n_u, emap.grid.n_v))
        for plane in (
            emap.elevation,
            intf.mean_phase_delay,
            intf.circular_variance,
            intf.combined_magnitude,
            intf.snr_db,
        ):
            fh.write(np.ascontiguousarray(plane, dtype="<f4").tobytes())


def read_elevation_map(path) -> ElevationMap:
    with open(path, "rb") as fh:
        _check_header(fh, MAGIC_ELV, path)
        grid = _read_grid(fh)
        phase_center = np.frombuffer(_read_exact(fh, 24, "phase center"), dtype="<f8").copy()
        wavelength, baseline = _unpack(fh, "<dd", "map header")
        n_u, n_v = _unpack(fh, "<II", "map dims")
        if (n_u, n_v) != (grid.n_u, grid.n_v):
            raise DataFormatError(f"{path}: plane dims {(n_u, n_v)} do not match grid")
        planes = []
        for name in ("elevation", "phase", "variance", "magnitude", "snr"):
            raw = _read_exact(fh, n_u * n_v * 4, f"{name} plane")
            planes.append(np.frombuffer(raw, dtype="<f4").reshape(n_u, n_v).astype(np.float64))
    intf = InterferogramGrid(
        grid=grid,
        mean_phase_delay=planes[1],
        circular_variance=planes[2],
        combined_magnitude=planes[3],
        snr_db=planes[4],
    )
    return ElevationMap(
        grid=grid,
        phase_center=phase_center,
        wavelength_m=wavelength,
        baseline_m=baseline,
        elevation=planes[0],
        interferogram=intf,
    )


def write_pgm(image: np.ndarray, path, floor_db: float = -60.0) -> None:
    """Dump a complex image as 16-bit log-magnitude PGM for inspection.

    Magnitudes are scaled to dB below the image peak, clipped at floor_db,
    and mapped to the full 16-bit range.  Rows run along v, columns along u.
    """
    mag = np.abs(np.asarray(image))
    peak = mag.max()
    if peak <= 0:
        db = np.full_like(mag, floor_db, dtype=float)
    else:
        with np.errstate(divide="ignore"):
            db = 20.0 * np.log10(mag / peak)
        db = np.maximum(db, floor_db)
    scaled = np.round((db - floor_db) / (-floor_db) * 65535.0).astype(">u2")
    scaled = scaled.T  # (n_v, n_u): image row = cross-track line
    with open(path, "wb") as fh:
        fh.write(f"P5\n{scaled.shape[1]} {scaled.shape[0]}\n65535\n".encode("ascii"))
        fh.write(scaled.tobytes())
