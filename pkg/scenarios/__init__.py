# Init file to mark this directory as a Python package.
