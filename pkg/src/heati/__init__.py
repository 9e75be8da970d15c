"""Classical simulation of a trapped-ion hardware-efficient variational ansatz.

Modules: ``pauli`` and ``quantum`` (state vectors and Pauli algebra),
``hamiltonians`` (resource Hamiltonians and exact evolution), ``chemistry``
(FCIDUMP and Jordan-Wigner), ``ansatz``, ``gradient``, ``optimizer``,
``noise`` and ``experiments`` (configs, runner, CLI).
"""

__version__ = "0.1.0"
