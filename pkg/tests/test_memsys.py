import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from saber_dse.dse import SHIPPED, load_profile
from saber_dse.memsys import (
    Access,
    AccessRequest,
    AddressError,
    BufferExclusivityError,
    MemImage,
    MemoryConfig,
    MemoryConfigError,
    PortType,
    SharedShiftBuffer,
    copy_stream,
    map_logical,
    schedule,
)

CONFIGS = {name: load_profile(name).memory for name in SHIPPED}
GEOMETRY = {"DP_1": "1(1024x64)", "DP_2": "2(1024x32)", "DP_4": "4(1024x16)",
            "DP_8": "8(512x16)", "PIP_DP_4": "4(1024x16)", "PIP_SP_4": "4(256x64)"}


def R(addr, block="host", dependent=False):
    return AccessRequest(Access.READ, addr, block, dependent=dependent)


def W(addr, data=0, block="host"):
    return AccessRequest(Access.WRITE, addr, block, data=data)


@pytest.mark.parametrize("name", SHIPPED)
def test_shipped_geometry_and_capacity(name):
    cfg = CONFIGS[name]
    assert cfg.geometry == GEOMETRY[name]
    assert cfg.capacity_bits == 65536
    assert cfg.port_type is (PortType.SINGLE if name == "PIP_SP_4" else PortType.DUAL)
    assert cfg.pipelined == name.startswith("PIP")


@pytest.mark.parametrize("name", SHIPPED)
def test_mapping_is_bijective(name):
    cfg = CONFIGS[name]
    cells = set()
    for addr in range(1024):
        pl = map_logical(addr, cfg)
        bits = sorted((lo, hi) for _, lo, hi in pl.slices)
        assert bits[0][0] == 0 and bits[-1][1] == 63
        assert all(b[1] + 1 == c[0] for b, c in zip(bits, bits[1:]))
        for inst, lo, _ in pl.slices:
            assert 0 <= inst < cfg.instances and 0 <= pl.row < cfg.depth
            cells.add((inst, pl.row, lo))
    assert len(cells) == 1024 * cfg.stripe


def test_mapping_examples():
    pl = map_logical(5, CONFIGS["DP_1"])
    assert pl.slices == ((0, 0, 63),) and pl.row == 5
    pl = map_logical(5, CONFIGS["DP_4"])
    assert pl.instances == (0, 1, 2, 3) and pl.row == 5
    assert [hi - lo + 1 for _, lo, hi in pl.slices] == [16] * 4
    pl = map_logical(1023, CONFIGS["DP_8"])
    assert pl.instances == (4, 5, 6, 7) and pl.row == 511
    assert map_logical(511, CONFIGS["DP_8"]).instances == (0, 1, 2, 3)
    assert map_logical(1023, CONFIGS["PIP_SP_4"]).instances == (3,)
    with pytest.raises(AddressError):
        map_logical(1024, CONFIGS["DP_1"])


def test_bad_configs_rejected():
    with pytest.raises(MemoryConfigError):
        MemoryConfig("x", PortType.DUAL, 3, 1024, 24)
    with pytest.raises(MemoryConfigError):
        MemoryConfig("x", PortType.DUAL, 2, 512, 32)
    with pytest.raises(MemoryConfigError):
        MemoryConfig.from_dict({"name": "x", "port_type": "triple", "instances": 1, "depth": 1024, "width": 64})
    with pytest.raises(MemoryConfigError):
        MemoryConfig.from_dict({"name": "x"})


def test_config_loads_from_file(tmp_path):
    path = tmp_path / "mem.toml"
    path.write_text('[memory]\nname = "t"\nport_type = "single"\ninstances = 2\ndepth = 1024\nwidth = 32\n')
    cfg = MemoryConfig.load(path)
    assert cfg.port_type is PortType.SINGLE and cfg.stripe == 2 and not cfg.pipelined


def test_schedule_port_semantics():
    assert schedule([], CONFIGS["DP_1"]).cycles == 0
    both = [(R(3), W(7))]
    assert schedule(both, CONFIGS["DP_1"]).cycles == 1
    single = MemoryConfig("sp", PortType.SINGLE, 1, 1024, 64)
    res = schedule(both, single)
    assert res.cycles == 2
    # read goes first on a single port
    assert res.data[0] is None and res.ready[0] <= res.ready[1]
    # different instances do not conflict even on a single port
    assert schedule([(R(3), W(700))], CONFIGS["PIP_SP_4"]).cycles == 1
    assert schedule([(R(3), W(7))], CONFIGS["PIP_SP_4"]).cycles == 2


def test_pipeline_register_latency():
    plain = MemoryConfig("dp", PortType.DUAL, 4, 1024, 16)
    piped = CONFIGS["PIP_DP_4"]
    for cfg, ready in ((plain, 1), (piped, 2)):
        res = schedule([R(0, "sampler")], cfg)
        assert res.issue == [0] and res.ready == [ready]
    # a streaming reader only sees one extra cycle at the end
    stream = [R(a, "sampler") for a in range(50)]
    assert schedule(stream, piped).cycles == schedule(stream, plain).cycles + 1
    # a reader that waits on each word pays the register on every access
    dep = [R(a, "sampler", dependent=True) for a in range(50)]
    assert schedule(dep, piped).cycles == 2 * schedule(dep, plain).cycles
    # other blocks are not behind the register
    assert schedule([R(0, "multiplier")], piped).cycles == 1


def test_copy_streams():
    assert schedule(copy_stream("c", 0, 100, 4, CONFIGS["DP_1"]), CONFIGS["DP_1"]).cycles == 5
    assert schedule(copy_stream("c", 0, 100, 4, CONFIGS["PIP_SP_4"]), CONFIGS["PIP_SP_4"]).cycles == 8


def random_stream(rng, n):
    out = []
    for _ in range(n):
        k = int(rng.integers(1, 3))
        bundle = []
        for _ in range(k):
            addr = int(rng.integers(0, 1024))
            if rng.random() < 0.5:
                bundle.append(W(addr, int(rng.integers(0, 2**63)), block="sampler"))
            else:
                bundle.append(R(addr, block=str(rng.choice(["sampler", "host"])), dependent=bool(rng.random() < 0.3)))
        out.append(tuple(bundle))
    return out


def test_functional_transparency():
    rng = np.random.default_rng(12)
    stream = random_stream(rng, 400)
    seen = None
    for cfg in CONFIGS.values():
        image = MemImage(cfg)
        for a in range(1024):
            image.write_word(a, (a * 0x9E3779B97F4A7C15) & (2**64 - 1))
        data = schedule(stream, cfg, image).data
        final = image.read_bytes(0, 1024)
        if seen is None:
            seen = (data, final)
        assert (data, final) == seen


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 2**32))
def test_pipelining_never_faster(seed):
    rng = np.random.default_rng(seed)
    stream = random_stream(rng, 60)
    plain = MemoryConfig("dp", PortType.DUAL, 4, 1024, 16)
    assert schedule(stream, CONFIGS["PIP_DP_4"]).cycles >= schedule(stream, plain).cycles
    sp_plain = MemoryConfig("sp", PortType.SINGLE, 4, 256, 64)
    assert schedule(stream, CONFIGS["PIP_SP_4"]).cycles >= schedule(stream, sp_plain).cycles


def test_mem_image_round_trip_and_bounds():
    image = MemImage(CONFIGS["DP_8"])
    image.write_bytes(1020, bytes(range(32)))
    assert image.read_bytes(1020, 4) == bytes(range(32))
    with pytest.raises(AddressError):
        image.read_bytes(1020, 5)
    with pytest.raises(AddressError):
        image.write_word(-1, 0)
    with pytest.raises(ValueError):
        image.write_bytes(0, b"abc")


def test_request_validation():
    with pytest.raises(ValueError):
        AccessRequest(Access.READ, 0, width=65)
    with pytest.raises(AddressError):
        AccessRequest(Access.READ, 1024)


def test_partial_width_write():
    cfg = CONFIGS["DP_2"]
    image = MemImage(cfg)
    image.write_word(9, 2**64 - 1)
    schedule([AccessRequest(Access.WRITE, 9, width=8, data=0)], cfg, image)
    assert image.read_word(9) == 2**64 - 256


def test_shift_buffer():
    buf = SharedShiftBuffer()
    buf.acquire("ADDPACK")
    buf.shift(320, 2**320 - 1, "ADDPACK")
    assert buf.fill == 320
    with pytest.raises(BufferExclusivityError):
        buf.acquire("VVMUL")
    buf.release("ADDPACK")
    assert buf.fill == 0 and buf.owner is None
    buf.acquire("VVMUL")
    buf.shift(676, 1, "VVMUL")
    assert buf.fill == 676
    with pytest.raises(OverflowError):
        buf.shift(1, 0, "VVMUL")
    assert buf.drain("VVMUL") == 1 and buf.fill == 0
    with pytest.raises(BufferExclusivityError):
        buf.shift(4, 0, "ADDROUND")
    with pytest.raises(BufferExclusivityError):
        buf.release("ADDROUND")
    buf.release("VVMUL")
    with pytest.raises(BufferExclusivityError):
        buf.shift(1)
