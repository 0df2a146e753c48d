import os
import sys

# make plot.py importable when the package is not pip-installed
sys.path.insert(0, os.path.dirname(os.path.dirname(os.path.abspath(__file__))))
