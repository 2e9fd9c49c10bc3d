"""Safety verification of parameterised multi-agent systems.

Submodules:
  logic    -- cubes, state formulae, EUF congruence closure, exists/forall solver
  model    -- system model (templates, protocols, snapshots), formula evaluation
  dsl      -- textual model format parser / printer
  encoder  -- array-based transition-system encodings (interleaved, concurrent)
  engine   -- symbolic backward reachability, locality analysis, trace extraction
  oracle   -- explicit-state enumeration, trace replay, cross checking
  mcmt     -- MCMT export and witness parsing
  corpus   -- pseudo-random model generation for cross validation
"""

__version__ = "0.1.0"
