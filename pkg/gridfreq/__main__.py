from gridfreq.cli import main

main()
