# DRUM rule miner
