from invariant_osc.harness.cli import main

raise SystemExit(main())
