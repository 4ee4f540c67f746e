"""Allow running as: python -m cosmoweyl"""
import sys
from .app.main import main

sys.exit(main())
