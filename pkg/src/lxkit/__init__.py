"""Consumer-perception text analytics toolkit.

Subsystems:
  taxonomy      canonical perceptions, labels, and ordering
  scales        survey-scale scoring rules (Likert means, NPS, aspect codes)
  instructions  instruction-record building, splits, balancing, decoding
  inference     remote/lexicon classification backends with cost accounting
  finetune      desk-scale fine-tuning math (softmax, CE loss, low-rank
                adapters, SGD/AdamW, gradient checks)
  metrics       F1 protocol and intercoder agreement
  mediation     two-equation FGLS system with indirect-effect inference
  synthdata     seeded synthetic product-record generator
  service       batch CSV pipeline: engine, job store, HTTP API
"""

__version__ = "0.1.0"
