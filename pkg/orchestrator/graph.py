"""Graph construction and compilation for the LangGraph training workflow."""
from functools import partial

from langgraph.checkpoint.memory import MemorySaver
from langgraph.graph import END, StateGraph

from orchestrator.nodes import (
    TrainingContext,
    checkpoint_node,
    evaluate_node,
    finalize_node,
    initial_evaluation_node,
    train_epoch_node,
)
from orchestrator.routing import (
    ROUTE_CHECKPOINT,
    ROUTE_EVALUATE,
    ROUTE_FINALIZE,
    ROUTE_TRAIN,
    should_checkpoint,
    should_continue,
    should_evaluate,
)
from orchestrator.state import TrainingState


def create_graph(context: TrainingContext):
    """
    Create and compile the training workflow.

    The workflow structure:
    1. initial_evaluation scores the untrained model, which becomes the first best
    2. train_epoch runs one shuffled pass (or up to ``max_steps``)
    3. evaluate runs every ``eval_every`` epochs and before the last route to finalize
    4. checkpoint snapshots parameters whenever validation accuracy improves
    5. finalize restores the best parameters once a budget or patience runs out

    Args:
        context: Model, optimizer and examples bound into every node

    Returns:
        Compiled LangGraph application with memory checkpointing
    """
    workflow = StateGraph(TrainingState)

    workflow.add_node("initial_evaluation", partial(initial_evaluation_node, context=context))
    workflow.add_node(ROUTE_TRAIN, partial(train_epoch_node, context=context))
    workflow.add_node(ROUTE_EVALUATE, partial(evaluate_node, context=context))
    workflow.add_node(ROUTE_CHECKPOINT, partial(checkpoint_node, context=context))
    workflow.add_node(ROUTE_FINALIZE, partial(finalize_node, context=context))

    workflow.set_entry_point("initial_evaluation")

    checkpoint_routes = {
        ROUTE_CHECKPOINT: ROUTE_CHECKPOINT,
        ROUTE_TRAIN: ROUTE_TRAIN,
        ROUTE_FINALIZE: ROUTE_FINALIZE,
    }
    workflow.add_conditional_edges("initial_evaluation", should_checkpoint, checkpoint_routes)
    workflow.add_conditional_edges(
        ROUTE_TRAIN,
        should_evaluate,
        {
            ROUTE_EVALUATE: ROUTE_EVALUATE,
            ROUTE_TRAIN: ROUTE_TRAIN,
            ROUTE_FINALIZE: ROUTE_FINALIZE,
        },
    )
    workflow.add_conditional_edges(ROUTE_EVALUATE, should_checkpoint, checkpoint_routes)
    workflow.add_conditional_edges(
        ROUTE_CHECKPOINT,
        should_continue,
        {
            ROUTE_TRAIN: ROUTE_TRAIN,
            ROUTE_FINALIZE: ROUTE_FINALIZE,
        },
    )
    workflow.add_edge(ROUTE_FINALIZE, END)

    memory = MemorySaver()
    app = workflow.compile(checkpointer=memory)
    return app
