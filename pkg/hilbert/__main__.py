from hilbert.main import main

main()
