# encloc - Encrypted Localization
# 基于同态加密的服务器端 Wi-Fi 指纹定位系统

__version__ = "0.1.0"
__author__ = "encloc Team"
__description__ = "隐私保护的 Wi-Fi 指纹室内定位（Paillier / DGK）"
