# hiermdp/commands/__init__.py
# CLI sub-commands package
