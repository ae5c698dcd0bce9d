# Photonic Hybrid Precoding Core Module
