"""Compositional part-based classification with transparent explanations."""

from .data import (AttributeVector, AttributeVocabulary, BBox,
                   ClassVocabulary, Sample, SegMap, SynthNoiseConfig,
                   TripleDataset, VectorizeConfig, load_dataset,
                   rasterize_bboxes, read_segmap, save_dataset,
                   synth_generate, vectorize, write_segmap)
from .errors import FormatError, NumericError, ValidationError, XPartsError
from .kb import (KnowledgeBase, Triple, extract_kb, kb_to_graph, load_kb,
                 monumai_expert_kb, parse_kb, save_kb, serialize_kb)
from .classifier import (LogRegModel, NaiveBayesModel, TrainConfig, accuracy,
                         accuracy_nb, gradient, load_model, loss, predict,
                         predict_nb, predict_proba, save_model, score_linear,
                         sigmoid_predict, softmax, train_logreg, train_nb)
from .lsp import (FailureCase, NoiseConfig, PredictorConfig, PredQuality,
                  SegQuality, classify_failure, predict_segmap)
from .explain import (CounterfactualResult, Explanation, audit_intrinsicality,
                      audit_objectivity, audit_self_explaining,
                      counterfactual_scan, explain)
from .kg import (GedResult, KnowledgeGraph, audit_validity, extract_kg, ged,
                 kg_deterministic_classify, kg_to_dot, kg_to_edge_list,
                 parse_edge_list)
from .pipeline import (EvalReport, evaluate, ground_truth_vectors,
                       report_to_records, report_to_text, run_inference)

__version__ = "0.1.0"
