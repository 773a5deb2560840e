"""Wire-format tests: layouts frozen against an independent CRC reference,
round-trips, canonical encoding, and corruption rejection."""

import numpy as np
import pytest

from silentlink.codec import (
    CheckpointPayload,
    Command,
    ControlPacket,
    DataPacket,
    EncodeError,
    FrameError,
    IntegrityError,
    PriorityPayload,
    PriorityRecord,
    ProtocolError,
    decode_control,
    decode_data,
    encode_control,
    encode_data,
    from_milli,
    to_milli,
    wrap_millidegrees,
)


def crc16_reference(data: bytes) -> int:
    """Bit-serial CRC-16/CCITT-FALSE, written independently of the codec."""
    crc = 0xFFFF
    for byte in data:
        crc ^= byte << 8
        for _ in range(8):
            crc = ((crc << 1) ^ 0x1021) & 0xFFFF if crc & 0x8000 else (crc << 1) & 0xFFFF
    return crc


def random_control(rng) -> ControlPacket:
    return ControlPacket(
        command=Command(int(rng.integers(0, 5))),
        distance_cm=int(rng.integers(-(2**31) + 1, 2**31 - 1)),
        angle_mdeg=int(rng.integers(-179999, 180001)),
        vertical_cm=int(rng.integers(-(2**31) + 1, 2**31 - 1)),
        seq=int(rng.integers(0, 2**16)),
        ack_seq=int(rng.integers(0, 2**16)),
    )


def random_data(rng) -> DataPacket:
    if rng.random() < 0.5:
        return DataPacket(
            0,
            CheckpointPayload(
                seq=int(rng.integers(0, 2**16)),
                t_ds=int(rng.integers(0, 2**32)),
                x_cm=int(rng.integers(-(2**31) + 1, 2**31 - 1)),
                y_cm=int(rng.integers(-(2**31) + 1, 2**31 - 1)),
                z_cm=int(rng.integers(-(2**31) + 1, 2**31 - 1)),
                heading_cdeg=int(rng.integers(-(2**15), 2**15)),
                battery_pct=int(rng.integers(0, 101)),
            ),
        )
    count = int(rng.integers(0, 4))
    records = tuple(
        PriorityRecord(
            channel=int(rng.integers(0, 256)),
            dt_offset_ds=int(rng.integers(0, 2**16)),
            value_milli=int(rng.integers(-(2**31) + 1, 2**31 - 1)),
        )
        for _ in range(count)
    )
    return DataPacket(
        int(rng.integers(1, 2**16)),
        PriorityPayload(
            seq=int(rng.integers(0, 2**16)),
            t_ds=int(rng.integers(0, 2**32)),
            sensitivity=int(rng.integers(0, 2)),
            records=records,
        ),
    )


class TestControlPacket:
    def test_return_packet_layout(self):
        p = ControlPacket(Command.RETURN, 0, 0, 0, seq=1, ack_seq=0)
        b = encode_control(p)
        assert len(b) == 32
        assert b[0] == 0x02 and b[1] == 0x00
        assert b[2:14] == bytes(12)
        assert b[14:16] == b"\x00\x01" and b[16:18] == b"\x00\x00"
        assert b[18:30] == bytes(12)
        expected_crc = crc16_reference(b[:30])
        assert int.from_bytes(b[30:32], "big") == expected_crc

    def test_round_trip_random(self):
        rng = np.random.default_rng(10)
        for _ in range(500):
            p = random_control(rng)
            assert decode_control(encode_control(p)) == p

    def test_angle_out_of_range_rejected(self):
        with pytest.raises(EncodeError):
            encode_control(ControlPacket(Command.CONTINUE, angle_mdeg=180001))
        # the boundary itself is valid
        encode_control(ControlPacket(Command.CONTINUE, angle_mdeg=180000))

    def test_all_zero_frame_fails_integrity(self):
        # CRC of 30 zero bytes is nonzero, so the zero CRC field mismatches.
        assert crc16_reference(bytes(30)) != 0
        with pytest.raises(IntegrityError):
            decode_control(bytes(32))

    def test_truncated_frame(self):
        with pytest.raises(FrameError):
            decode_control(bytes(31))

    def test_unknown_command_byte(self):
        p = ControlPacket(Command.CONTINUE)
        b = bytearray(encode_control(p))
        b[0] = 9
        b[30:32] = crc16_reference(bytes(b[:30])).to_bytes(2, "big")
        with pytest.raises(ProtocolError):
            decode_control(bytes(b))

    def test_single_byte_corruption_always_rejected(self):
        rng = np.random.default_rng(11)
        p = random_control(rng)
        b = encode_control(p)
        for pos in range(32):
            for delta in (0x01, 0x80, 0xFF):
                corrupted = bytearray(b)
                corrupted[pos] ^= delta
                with pytest.raises((IntegrityError, ProtocolError)):
                    decode_control(bytes(corrupted))

    def test_canonical_encoding(self):
        rng = np.random.default_rng(12)
        for _ in range(200):
            b = encode_control(random_control(rng))
            assert encode_control(decode_control(b)) == b

    def test_wrap_millidegrees(self):
        assert wrap_millidegrees(180001) == -179999
        assert wrap_millidegrees(180000) == 180000
        assert wrap_millidegrees(-180000) == 180000
        assert wrap_millidegrees(360000) == 0


class TestDataPacket:
    def test_checkpoint_layout(self):
        p = DataPacket(0, CheckpointPayload(0, 0, 0, 0, 0, 0, 100))
        b = encode_data(p)
        assert len(b) == 32
        assert b[:4] == bytes(4)
        assert b[22] == 0x64  # battery: priority(2) + seq(2) + t(4) + xyz(12) + heading(2)
        assert decode_data(b) == p

    def test_priority_round_trip(self):
        p = DataPacket(7, PriorityPayload(5, 120, 1, (PriorityRecord(2, 0, 1500),)))
        b = encode_data(p)
        got = decode_data(b)
        assert got == p
        assert from_milli(got.payload.records[0].value_milli) == 1.5

    def test_discriminator_rule(self):
        cp = encode_data(DataPacket(0, CheckpointPayload(1, 2, 3, 4, 5, 6, 7)))
        assert isinstance(decode_data(cp).payload, CheckpointPayload)
        pp = encode_data(DataPacket(1, PriorityPayload(1, 2, 0, ())))
        assert isinstance(decode_data(pp).payload, PriorityPayload)

    def test_priority_zero_requires_checkpoint(self):
        with pytest.raises(EncodeError):
            encode_data(DataPacket(0, PriorityPayload(1, 2, 0, ())))
        with pytest.raises(EncodeError):
            encode_data(DataPacket(3, CheckpointPayload(1, 2, 3, 4, 5, 6, 7)))

    def test_too_many_records(self):
        records = tuple(PriorityRecord(1, 0, 0) for _ in range(4))
        with pytest.raises(EncodeError):
            encode_data(DataPacket(1, PriorityPayload(1, 2, 0, records)))

    def test_battery_range(self):
        with pytest.raises(EncodeError):
            encode_data(DataPacket(0, CheckpointPayload(0, 0, 0, 0, 0, 0, 101)))

    def test_nonzero_padding_rejected(self):
        b = bytearray(encode_data(DataPacket(0, CheckpointPayload(0, 0, 0, 0, 0, 0, 50))))
        b[-1] = 1
        with pytest.raises(ProtocolError):
            decode_data(bytes(b))

    def test_unused_record_slot_must_be_zero(self):
        b = bytearray(encode_data(DataPacket(1, PriorityPayload(1, 2, 0, ()))))
        b[2 + 8 + 3] = 1  # inside the first (unused) record slot
        with pytest.raises(ProtocolError):
            decode_data(bytes(b))

    def test_round_trip_and_canonical_random(self):
        rng = np.random.default_rng(13)
        for _ in range(500):
            p = random_data(rng)
            b = encode_data(p)
            assert len(b) == 32
            assert decode_data(b) == p
            assert encode_data(decode_data(b)) == b

    def test_fixed_point_range(self):
        assert to_milli(1.5) == 1500
        assert to_milli(-2.0004) == -2000
        with pytest.raises(EncodeError):
            to_milli(3.0e6)
