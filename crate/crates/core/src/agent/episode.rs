//! The episode orchestrator: inner reasoning loop, judge gate, and
//! reflection-driven retries.

use std::sync::Arc;

use crate::actions::{parse_actions, ActionEvaluator, Observation};
use crate::agent::catalog::PromptCatalog;
use crate::agent::{
    judge_verdict, next_role, sanitize_reflection, sanitize_reply, AgentRole, ReasoningStep,
    ReasoningTrace, StepRecord, TraceSink,
};
use crate::llm::{ChatBackend, GenerationParams, LlmError};

/// During reasoning calls the model must stop before inventing graph
/// feedback of its own; observations are produced only by the engine.
const REASONING_STOP: &str = "Observation";

/// The model endpoints used by an episode. The three roles may share one
/// backend or use different ones (for example, a stronger judge).
#[derive(Clone)]
pub struct AgentBackends {
    pub reason: Arc<dyn ChatBackend>,
    pub judge: Arc<dyn ChatBackend>,
    pub reflect: Arc<dyn ChatBackend>,
}

impl AgentBackends {
    /// One backend serving all three roles.
    pub fn single(backend: Arc<dyn ChatBackend>) -> Self {
        AgentBackends {
            reason: backend.clone(),
            judge: backend.clone(),
            reflect: backend,
        }
    }
}

impl std::fmt::Debug for AgentBackends {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("AgentBackends")
            .field("reason", &self.reason.name())
            .field("judge", &self.judge.name())
            .field("reflect", &self.reflect.name())
            .finish()
    }
}

/// Episode budgets and generation settings.
#[derive(Debug, Clone)]
pub struct EpisodeOptions {
    /// Inner-loop step budget per attempt.
    pub t_max: usize,
    /// Maximum reflections; an episode therefore runs at most `n_max + 1`
    /// attempts.
    pub n_max: usize,
    /// Base generation parameters; reasoning calls additionally stop at
    /// `"Observation"`.
    pub params: GenerationParams,
    /// Identifier stamped on every trace record.
    pub question_id: String,
}

impl Default for EpisodeOptions {
    fn default() -> Self {
        EpisodeOptions {
            t_max: 10,
            n_max: 2,
            params: GenerationParams::default(),
            question_id: "q0".to_string(),
        }
    }
}

/// One inner-loop attempt: its steps, the answer it produced (if any), and
/// the judge's verdict (`None` when the attempt ran out of steps and was
/// therefore never judged).
#[derive(Debug, Clone, PartialEq)]
pub struct AttemptRecord {
    pub steps: Vec<ReasoningStep>,
    pub answer: Option<String>,
    pub judged_correct: Option<bool>,
}

/// Everything an episode produced.
#[derive(Debug, Clone, PartialEq)]
pub struct EpisodeState {
    /// The final attempt's steps together with all reflections gathered.
    pub trace: ReasoningTrace,
    /// Reflections used.
    pub n: usize,
    /// Whether the judge accepted the final produced answer.
    pub correct: bool,
    /// The most recent answer any attempt produced.
    pub final_answer: Option<String>,
    /// Every attempt, in order.
    pub attempts: Vec<AttemptRecord>,
}

impl EpisodeState {
    pub fn attempts_used(&self) -> usize {
        self.attempts.len()
    }
}

/// Runs episodes against one graph, retrieval index, and prompt catalog.
pub struct EpisodeRunner<'a> {
    evaluator: ActionEvaluator<'a>,
    catalog: &'a PromptCatalog,
    backends: AgentBackends,
    options: EpisodeOptions,
}

impl<'a> EpisodeRunner<'a> {
    pub fn new(
        evaluator: ActionEvaluator<'a>,
        catalog: &'a PromptCatalog,
        backends: AgentBackends,
        options: EpisodeOptions,
    ) -> Self {
        EpisodeRunner {
            evaluator,
            catalog,
            backends,
            options,
        }
    }

    pub fn options(&self) -> &EpisodeOptions {
        &self.options
    }

    /// Runs one full episode for `question`. Model transport failures abort
    /// the episode; everything the model gets wrong in-band (bad actions,
    /// missing verdict tokens) is handled inside it.
    pub fn run(&self, question: &str, sink: &mut dyn TraceSink) -> Result<EpisodeState, LlmError> {
        let mut reflections: Vec<String> = Vec::new();
        let mut attempts: Vec<AttemptRecord> = Vec::new();
        let mut correct;
        let mut final_answer: Option<String> = None;

        loop {
            let attempt_no = attempts.len() + 1;
            let (steps, answer) = self.run_inner_loop(question, &reflections, attempt_no, sink)?;
            let judged_correct = match &answer {
                Some(answer_text) => {
                    final_answer = Some(answer_text.clone());
                    let verdict = self.judge(question, &steps, attempt_no, sink)?;
                    correct = verdict;
                    Some(verdict)
                }
                // An attempt that never finished has no answer to grade; it
                // counts as incorrect without consuming a judge call.
                None => {
                    correct = false;
                    None
                }
            };
            attempts.push(AttemptRecord {
                steps,
                answer,
                judged_correct,
            });
            if correct || reflections.len() >= self.options.n_max {
                break;
            }
            let failed_steps = &attempts.last().expect("attempt just pushed").steps;
            let reflection = self.reflect(question, failed_steps, attempt_no, sink)?;
            reflections.push(reflection);
        }

        let last = attempts.last().expect("at least one attempt ran");
        Ok(EpisodeState {
            trace: ReasoningTrace {
                question: question.to_string(),
                steps: last.steps.clone(),
                reflections: reflections.clone(),
            },
            n: reflections.len(),
            correct,
            final_answer,
            attempts,
        })
    }

    /// One attempt: up to `t_max` plan/thought/action steps, stopping early
    /// when the model emits a lone `Finish[answer]`.
    fn run_inner_loop(
        &self,
        question: &str,
        reflections: &[String],
        attempt: usize,
        sink: &mut dyn TraceSink,
    ) -> Result<(Vec<ReasoningStep>, Option<String>), LlmError> {
        let params = self.reasoning_params();
        let mut steps: Vec<ReasoningStep> = Vec::new();

        for t in 1..=self.options.t_max {
            let plan = self.reason_once(question, reflections, &steps, AgentRole::Plan, &params)?;
            self.log(sink, attempt, t, "plan", &plan);
            steps.push(ReasoningStep::begun(t, plan));

            let thought =
                self.reason_once(question, reflections, &steps, AgentRole::Thought, &params)?;
            self.log(sink, attempt, t, "thought", &thought);
            steps.last_mut().expect("step exists").thought = Some(thought);

            let action =
                self.reason_once(question, reflections, &steps, AgentRole::Action, &params)?;
            self.log(sink, attempt, t, "action", &action);
            let step = steps.last_mut().expect("step exists");
            step.action_raw = Some(action.clone());

            match parse_actions(&action) {
                Ok(list) => {
                    if let Some(answer) = list.finish_answer() {
                        let answer = answer.to_string();
                        step.finish_answer = Some(answer.clone());
                        self.log(
                            sink,
                            attempt,
                            t,
                            "observation",
                            &format!("Answer is {answer}"),
                        );
                        return Ok((steps, Some(answer)));
                    }
                    let obs = self.evaluator.eval_list(&list);
                    self.log(sink, attempt, t, "observation", &obs.text);
                    steps.last_mut().expect("step exists").observation = Some(obs);
                }
                Err(err) => {
                    // Malformed actions stay in-band: the parser's guidance
                    // becomes the observation and the loop continues.
                    let obs = Observation::advisory(err.to_string());
                    self.log(sink, attempt, t, "observation", &obs.text);
                    steps.last_mut().expect("step exists").observation = Some(obs);
                }
            }
        }
        Ok((steps, None))
    }

    fn reason_once(
        &self,
        question: &str,
        reflections: &[String],
        steps: &[ReasoningStep],
        role: AgentRole,
        params: &GenerationParams,
    ) -> Result<String, LlmError> {
        debug_assert_eq!(next_role(steps), role, "role cycle out of order");
        let turns = self
            .catalog
            .reasoning_prompt(question, reflections, steps, role);
        let raw = self.backends.reason.complete(&turns, params)?;
        Ok(sanitize_reply(role, &raw))
    }

    fn judge(
        &self,
        question: &str,
        steps: &[ReasoningStep],
        attempt: usize,
        sink: &mut dyn TraceSink,
    ) -> Result<bool, LlmError> {
        let turns = self.catalog.evaluation_prompt(question, steps);
        let reply = self.backends.judge.complete(&turns, &self.options.params)?;
        self.log(sink, attempt, 0, "judge", &reply);
        match judge_verdict(&reply) {
            Some(verdict) => Ok(verdict),
            None => {
                log::warn!(
                    "question {}: judge reply carried neither [yes] nor [no]; treating as incorrect",
                    self.options.question_id
                );
                Ok(false)
            }
        }
    }

    fn reflect(
        &self,
        question: &str,
        steps: &[ReasoningStep],
        attempt: usize,
        sink: &mut dyn TraceSink,
    ) -> Result<String, LlmError> {
        let turns = self.catalog.reflection_prompt(question, steps);
        let reply = self
            .backends
            .reflect
            .complete(&turns, &self.options.params)?;
        let reflection = sanitize_reflection(&reply);
        self.log(sink, attempt, 0, "reflection", &reflection);
        Ok(reflection)
    }

    fn reasoning_params(&self) -> GenerationParams {
        let mut params = self.options.params.clone();
        if !params.stop_sequences.iter().any(|s| s == REASONING_STOP) {
            params.stop_sequences.push(REASONING_STOP.to_string());
        }
        params
    }

    fn log(&self, sink: &mut dyn TraceSink, attempt: usize, t: usize, role: &str, text: &str) {
        sink.record(&StepRecord {
            question_id: self.options.question_id.clone(),
            attempt,
            t,
            role: role.to_string(),
            text: text.to_string(),
        });
    }
}
