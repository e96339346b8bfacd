# keeps oracles.py / helpers.py importable from every test module
