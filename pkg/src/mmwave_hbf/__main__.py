"""
`python -m mmwave_hbf` 命令入口。

该入口仅用于便捷调用，实际会转发到 `mmwave_hbf.cli:main`。
"""

from .cli import main

if __name__ == "__main__":
    raise SystemExit(main())
