"""Desk-scale simulator of a hybrid electron-nuclear spin register.

Modules:
    linalg    states, channels, fidelities, partial trace
    register  hyperfine spectrum and frequency-selective gates
    entangle  GHZ/W preparation and the Mermin inequality test
    tomo      Pauli-basis state and single-qubit process tomography
    qec       three-qubit phase-flip error correction and its sweep
    grape     two-tone piecewise-constant pulse optimization
    readout   repetitive single-shot readout statistics
    defects   coupling-survey spectra and spin-count estimates
    cli       command-line experiments emitting CSV/JSON
"""

__version__ = "0.1.0"
