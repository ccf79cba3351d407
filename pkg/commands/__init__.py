"""
Workbench commands; each module exposes NAME, HELP and run(config).
"""
