mod common;

use std::collections::HashMap;

use candle_core::{DType, Tensor};
use docarg_core::corpus::Schema;
use docarg_model::config::{Precision, SubwordPooling};
use docarg_model::encoder::{Encoder, TransformerConfig};
use docarg_model::ops::Ctx;
use docarg_model::params::ParamStore;
use docarg_model::ArgumentModel;
use tokenizers::models::wordpiece::WordPiece;
use tokenizers::pre_tokenizers::bert::BertPreTokenizer;
use tokenizers::Tokenizer;

use common::{rows, three_sentence_doc, tiny_config};

const VOCAB: &[&str] = &[
    "[PAD]", "[UNK]", "[CLS]", "[SEP]", "rebels", "took", "the", "town", "troops", "attack", "##ed", "it", "again",
    "aid", "arrived", "later", "to", "##day",
];

fn write_checkpoint(dir: &std::path::Path) -> TransformerConfig {
    let geometry = TransformerConfig {
        vocab_size: VOCAB.len(),
        hidden_dim: 8,
        layers: 1,
        heads: 2,
        intermediate_dim: 16,
        max_positions: 32,
        type_vocab_size: 2,
        layer_norm_eps: 1e-12,
        position_offset: 0,
    };
    let config = serde_json::json!({
        "model_type": "bert",
        "vocab_size": geometry.vocab_size,
        "hidden_size": 8,
        "num_hidden_layers": 1,
        "num_attention_heads": 2,
        "intermediate_size": 16,
        "max_position_embeddings": 32,
        "type_vocab_size": 2,
        "layer_norm_eps": 1e-12,
        "hidden_act": "gelu"
    });
    std::fs::write(dir.join("config.json"), config.to_string()).unwrap();

    let vocab_txt = dir.join("vocab.txt");
    std::fs::write(&vocab_txt, VOCAB.join("\n")).unwrap();
    let wp = WordPiece::from_file(&vocab_txt.display().to_string())
        .unk_token("[UNK]".into())
        .build()
        .unwrap();
    std::fs::remove_file(vocab_txt).unwrap();
    let mut tok = Tokenizer::new(wp);
    tok.with_pre_tokenizer(Some(BertPreTokenizer));
    tok.save(dir.join("tokenizer.json"), false).unwrap();

    let mut p = ParamStore::new(99, DType::F32);
    Encoder::new(&mut p, geometry.clone()).unwrap();
    let mut map: HashMap<String, Tensor> = p
        .named_vars()
        .map(|(n, v)| (format!("bert.{n}"), v.as_tensor().clone()))
        .collect();
    map.insert("cls.predictions.bias".into(), Tensor::zeros(VOCAB.len(), DType::F32, &candle_core::Device::Cpu).unwrap());
    candle_core::safetensors::save(&map, dir.join("model.safetensors")).unwrap();
    geometry
}

#[test]
fn pretrained_checkpoint_loads_by_name() {
    let dir = tempfile::tempdir().unwrap();
    let geometry = write_checkpoint(dir.path());
    let doc = three_sentence_doc();
    let mut cfg = tiny_config(64, 4, Precision::F32);
    cfg.encoder.checkpoint = dir.path().display().to_string();
    cfg.encoder.subword_pooling = SubwordPooling::Mean;
    let model = ArgumentModel::initialise(cfg, Schema::from_corpus(&[doc.clone()]), &[], None, 0).unwrap();
    assert_eq!(model.geometry(), &geometry);
    assert_eq!(model.config.encoder.hidden_dim, 8);

    let mut reference = ParamStore::new(99, DType::F32);
    Encoder::new(&mut reference, geometry).unwrap();
    for (name, var) in reference.named_vars() {
        let loaded = model.params().get(name).unwrap();
        assert_eq!(rows2(loaded.as_tensor()), rows2(var.as_tensor()), "{name}");
    }

    let ex = model.prepare(&doc, 0).unwrap();
    // "attacked" and "today" split into two pieces each
    assert_eq!(ex.input.ids.len(), doc.document.words.len() + 2 + 2);
    assert_eq!(ex.input.word_ranges[5].len(), 2);
    let out = model.forward(&ex, &Ctx::eval()).unwrap();
    assert_eq!(out.state.z_global.dims(), &[12, 8]);
    assert!(rows(&out.fused).iter().flatten().all(|x| x.is_finite()));

    let saved = tempfile::tempdir().unwrap();
    model.save(saved.path()).unwrap();
    assert!(saved.path().join("tokenizer.json").exists());
    let back = ArgumentModel::load(saved.path()).unwrap();
    let again = back.forward(&back.prepare(&doc, 0).unwrap(), &Ctx::eval()).unwrap();
    assert_eq!(rows(out.logits.as_ref().unwrap()), rows(again.logits.as_ref().unwrap()));
}

#[test]
fn missing_checkpoint_names_the_cache() {
    let doc = three_sentence_doc();
    let mut cfg = tiny_config(8, 1, Precision::F32);
    cfg.encoder.checkpoint = "no-such-encoder".into();
    let err = ArgumentModel::initialise(cfg, Schema::from_corpus(&[doc]), &[], Some(std::path::Path::new("/nonexistent")), 0)
        .err()
        .unwrap()
        .to_string();
    assert!(err.contains("no-such-encoder") && err.contains("/nonexistent"), "{err}");
}

fn rows2(t: &Tensor) -> Vec<f32> {
    t.flatten_all().unwrap().to_vec1().unwrap()
}
