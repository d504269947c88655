from realizer.cli import main

raise SystemExit(main())
