import json
import socket

import pytest

from encloc.exceptions import FrameDecodeError, FrameSizeError, UnknownMessageTypeError
from encloc.net.wire import (
    MAX_FRAME_BYTES,
    MessageStream,
    WireMessage,
    error_message,
    frame_decode,
    frame_encode,
    parse_address,
)


def line(body, msg_type='cmp6', sid='s1', v=1):
    return json.dumps({'v': v, 'type': msg_type, 'sid': sid, 'body': body}).encode('utf-8') + b'\n'


class TestFrames:
    def test_encode_decode(self):
        msg = WireMessage(type='cmp6', sid='abc', body={'w': 'ff'})
        data = frame_encode(msg)
        assert data.endswith(b'\n')
        assert data.count(b'\n') == 1
        assert frame_decode(data) == msg

    def test_non_ascii_body(self):
        msg = error_message('abc', 'bad_parameter', 'k 必须 >= 1', 'hello')
        assert frame_decode(frame_encode(msg)).body['message'] == 'k 必须 >= 1'

    @pytest.mark.parametrize('value', ['00ff', 'FF', '-1', '0x1', '', 12])
    def test_non_canonical_hex(self, value):
        with pytest.raises(FrameDecodeError) as exc_info:
            frame_decode(line({'w': value}))
        assert exc_info.value.offset >= 0

    def test_canonical_hex_nested(self):
        frame_decode(line({'bits': [{'scheme': 'dgk', 'c': '0', 'kf': 'x'}, {'c': '1a'}]}, msg_type='cmp2'))
        with pytest.raises(FrameDecodeError):
            frame_decode(line({'bits': [{'c': '01a'}]}, msg_type='cmp2'))

    def test_offset_points_at_value(self):
        data = line({'w': '00ff'})
        with pytest.raises(FrameDecodeError) as exc_info:
            frame_decode(data)
        assert data[exc_info.value.offset:].startswith(b'"00ff"')

    def test_invalid_json(self):
        with pytest.raises(FrameDecodeError) as exc_info:
            frame_decode(b'{"v": 1, "type": \n')
        assert exc_info.value.offset > 0

    def test_unknown_type(self):
        with pytest.raises(UnknownMessageTypeError):
            frame_decode(line({}, msg_type='cmp7'))
        with pytest.raises(UnknownMessageTypeError):
            frame_encode(WireMessage(type='ping', sid='s'))

    def test_wrong_version(self):
        with pytest.raises(FrameDecodeError):
            frame_decode(line({}, v=2))

    @pytest.mark.parametrize('obj', [[1, 2], {'v': 1, 'type': 'hello', 'sid': 's'},
                                     {'v': 1, 'type': 'hello', 'sid': 3, 'body': {}},
                                     {'v': 1, 'type': 'hello', 'sid': 's', 'body': []}])
    def test_structure_errors(self, obj):
        with pytest.raises(FrameDecodeError):
            frame_decode(json.dumps(obj))

    def test_size_limit(self):
        big = WireMessage(type='hello', sid='s', body={'pad': 'a' * MAX_FRAME_BYTES})
        with pytest.raises(FrameSizeError):
            frame_encode(big)
        with pytest.raises(FrameSizeError):
            frame_decode(b'{' + b' ' * MAX_FRAME_BYTES + b'}')


class TestMessageStream:
    def test_counts_bytes_per_type(self):
        left, right = socket.socketpair()
        sender, receiver = MessageStream(left, 'a'), MessageStream(right, 'b')
        try:
            n1 = sender.send(WireMessage(type='hello', sid='s', body={'k': 1}))
            n2 = sender.send(WireMessage(type='cmp6', sid='s', body={'w': '1'}))
            assert receiver.receive().type == 'hello'
            assert receiver.receive().body == {'w': '1'}
            assert sender.bytes_sent == {'hello': n1, 'cmp6': n2}
            assert receiver.bytes_received == sender.bytes_sent
            assert receiver.count_received['cmp6'] == 1
            assert receiver.traffic()['bytes_received']['hello'] == n1
        finally:
            sender.close()
            receiver.close()

    def test_eof_returns_none(self):
        left, right = socket.socketpair()
        receiver = MessageStream(right, 'b')
        left.close()
        assert receiver.receive() is None
        receiver.close()

    def test_truncated_frame(self):
        left, right = socket.socketpair()
        receiver = MessageStream(right, 'b')
        left.sendall(b'{"v":1')
        left.close()
        with pytest.raises(FrameDecodeError):
            receiver.receive()
        receiver.close()


def test_parse_address():
    assert parse_address('127.0.0.1:8828') == ('127.0.0.1', 8828)
    assert parse_address(':9000') == ('127.0.0.1', 9000)
    with pytest.raises(ValueError):
        parse_address('localhost')
