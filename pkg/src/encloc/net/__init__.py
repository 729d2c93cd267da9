"""
网络服务：线路协议、定位服务端、客户端与基准测试
"""

from .bench import BenchReport, run_bench
from .client import ClientKeys, LocalizationResult, generate_client_keys, load_or_generate_keys, run_client
from .server import LocalizationServer, SessionSummary, load_table, serve
from .settings import BenchConfig, ClientConfig, ServerConfig
from .wire import MessageStream, WireMessage, frame_decode, frame_encode
