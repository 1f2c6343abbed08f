from .data import (Dataset, SyntheticDataset, analytic_posterior, bayes_accuracy, class_means,
                   gen_gaussian, load_idx, load_mnist, mnist_splits, split, synthetic_splits)
from .models import MLP, SGD, LinearModel, build_model
from .training import (TrainConfig, TrainRun, aggregate, evaluate, metrics_record,
                       objective_and_grad, train)
