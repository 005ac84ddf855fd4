#pragma once

#include <json.hpp>

#include "editvec/nncore.hpp"

namespace editvec::nn {

inline void to_json(nlohmann::json& j, const TrainConfig& c) {
  j = nlohmann::json{{"epochs", c.epochs},
                     {"batch_size", c.batch_size},
                     {"learning_rate", c.learning_rate},
                     {"adam_beta1", c.adam_beta1},
                     {"adam_beta2", c.adam_beta2},
                     {"adam_epsilon", c.adam_epsilon},
                     {"seed", c.seed},
                     {"stop_at_train_accuracy", c.stop_at_train_accuracy},
                     {"dropout",
                      {{"lstm_internal", c.dropout.lstm_internal},
                       {"pce_tanh", c.dropout.pce_tanh},
                       {"ce_tanh", c.dropout.ce_tanh},
                       {"classifier_tanh", c.dropout.classifier_tanh},
                       {"baseline_lstm", c.dropout.baseline_lstm}}}};
}

inline void from_json(const nlohmann::json& j, TrainConfig& c) {
  c.epochs = j.value("epochs", c.epochs);
  c.batch_size = j.value("batch_size", c.batch_size);
  c.learning_rate = j.value("learning_rate", c.learning_rate);
  c.adam_beta1 = j.value("adam_beta1", c.adam_beta1);
  c.adam_beta2 = j.value("adam_beta2", c.adam_beta2);
  c.adam_epsilon = j.value("adam_epsilon", c.adam_epsilon);
  c.seed = j.value("seed", c.seed);
  c.stop_at_train_accuracy = j.value("stop_at_train_accuracy", c.stop_at_train_accuracy);
  if (j.contains("dropout")) {
    const auto& d = j["dropout"];
    c.dropout.lstm_internal = d.value("lstm_internal", c.dropout.lstm_internal);
    c.dropout.pce_tanh = d.value("pce_tanh", c.dropout.pce_tanh);
    c.dropout.ce_tanh = d.value("ce_tanh", c.dropout.ce_tanh);
    c.dropout.classifier_tanh = d.value("classifier_tanh", c.dropout.classifier_tanh);
    c.dropout.baseline_lstm = d.value("baseline_lstm", c.dropout.baseline_lstm);
  }
}

}  // namespace editvec::nn
