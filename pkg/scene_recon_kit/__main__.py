import sys

from scene_recon_kit.cli import main

sys.exit(main())
