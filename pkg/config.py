import os

class Config:
    OUTPUT_DIR = os.environ.get('FRATOOL_OUTPUT_DIR', 'runs')
    METRICS_DIGITS = 6
    DEFAULT_THREADS = 1
    FAR_FIELD_CHUNK = 256
    POWER_KERNEL_BLOCK = 512
